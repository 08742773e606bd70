#pragma once

#include "unibom/vulndb.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <string_view>

namespace unibom::classify {

using vulndb::Severity;

enum class MemoryClass { NotMemory, Spatial, Temporal, OtherMemory, Unknown };

std::string_view to_string(MemoryClass c);
std::optional<MemoryClass> memory_class_from_string(std::string_view s);
bool is_memory_related(MemoryClass c);

enum class ClassifyErrc { OutOfRange, InvalidCweId, ExternalClassifierUnavailable, BadRuleTable };

class ClassifyError : public std::runtime_error {
public:
    ClassifyError(ClassifyErrc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ClassifyErrc code() const noexcept { return code_; }

private:
    ClassifyErrc code_;
};

/// CVSS v3.1 qualitative scale. Throws OutOfRange outside [0, 10].
Severity severity_bucket(std::optional<double> base_score);

/// Ordering used by severity gates: None < Low < Medium < High < Critical.
/// Unknown ranks below None.
int severity_rank(Severity s);

bool is_valid_cwe_id(std::string_view id);

class CweRuleTable {
public:
    /// Lines of `CWE-<n> <class>`; `#` starts a comment.
    static CweRuleTable parse(std::string_view text);
    static const CweRuleTable& bundled();

    std::optional<MemoryClass> lookup(std::string_view cwe_id) const;
    std::size_t size() const noexcept { return entries_.size(); }
    const std::map<std::string, MemoryClass>& entries() const noexcept { return entries_; }

private:
    std::map<std::string, MemoryClass> entries_;
};

/// Keyword rules applied to free text when the table has no answer.
MemoryClass classify_description(std::string_view description);

enum class Provenance { RuleTable, KeywordHeuristic, NoEvidence, ExternalModel, Cache, Fallback };

std::string_view to_string(Provenance p);

struct Classification {
    MemoryClass memory_class = MemoryClass::Unknown;
    Provenance provenance = Provenance::NoEvidence;
    std::string note;
};

class ClassifierPort {
public:
    virtual ~ClassifierPort() = default;
    virtual Classification classify(std::string_view identifier,
                                    std::optional<std::string_view> description) = 0;
};

/// Table lookup, then keyword heuristics on the description, then Unknown.
class RuleEngine final : public ClassifierPort {
public:
    explicit RuleEngine(const CweRuleTable& table = CweRuleTable::bundled()) : table_(&table) {}
    Classification classify(std::string_view identifier,
                            std::optional<std::string_view> description) override;

private:
    const CweRuleTable* table_;
};

/// Asks an external completion endpoint about table misses.
///
/// Wire format: `POST <url>` with JSON body `{"identifier": ..., "prompt": ...}`
/// and `Authorization: Bearer <key>`; the response is either plain text or
/// JSON `{"completion": "..."}` naming one of the four class labels. Answers
/// are cached in a JSON file keyed by identifier. Any failure falls back to
/// the rule engine and is recorded as Provenance::Fallback.
class ExternalModelClient final : public ClassifierPort {
public:
    struct Config {
        std::string url;  // http://host[:port]/path
        std::string api_key;
        std::chrono::milliseconds timeout{5000};
        std::filesystem::path cache_file;  // empty disables persistence
        std::size_t max_pending = 8;
    };

    ExternalModelClient(Config config, const CweRuleTable& table = CweRuleTable::bundled());

    /// Config from UNIBOM_CLASSIFIER_URL / UNIBOM_CLASSIFIER_KEY; nullopt when unset.
    static std::optional<Config> config_from_env(const std::filesystem::path& cache_file);

    Classification classify(std::string_view identifier,
                            std::optional<std::string_view> description) override;

    static std::string render_prompt(std::string_view identifier, std::string_view description);

private:
    MemoryClass request(std::string_view identifier, std::string_view description);
    std::string cache_key(std::string_view identifier, std::string_view description) const;
    void persist_cache_locked();

    Config config_;
    RuleEngine rules_;
    const CweRuleTable* table_;
    std::mutex request_mutex_;
    std::mutex cache_mutex_;
    std::counting_semaphore<1024> pending_;
    std::map<std::string, MemoryClass> cache_;
};

MemoryClass classify_cwe(std::string_view cwe_id, std::optional<std::string_view> description,
                         ClassifierPort& port);

/// Highest-priority class over the record's CWEs:
/// Spatial > Temporal > OtherMemory > NotMemory > Unknown.
MemoryClass classify_cve(const vulndb::CveRecord& record, ClassifierPort& port);

/// Priority used by classify_cve; higher wins.
int memory_priority(MemoryClass c);

}  // namespace unibom::classify
