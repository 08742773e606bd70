#pragma once

#include "unibom/cpe.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace unibom::vulndb {

enum class Severity { None, Low, Medium, High, Critical, Unknown };

std::string_view to_string(Severity s);
std::optional<Severity> severity_from_string(std::string_view s);

struct CveRecord {
    std::string cve_id;
    std::string description;
    std::vector<std::string> cwe_ids;
    std::optional<double> base_score;
    Severity base_severity = Severity::Unknown;
    int published_year = 0;
    std::vector<cpe::MatchCriterion> criteria;
};

bool is_valid_cve_id(std::string_view id);

enum class FeedErrc { MalformedFeed, DuplicateCveId };

class FeedError : public std::runtime_error {
public:
    FeedError(FeedErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    FeedErrc code() const noexcept { return code_; }

private:
    FeedErrc code_;
};

/// Immutable after construction. Criteria are indexed by literal
/// (vendor, product); patterns with a wildcard vendor or product go to a
/// separate list consulted on every query.
class VulnDatabase {
public:
    struct CriterionRef {
        std::string cve_id;
        std::size_t criterion_index;
    };
    using ProductKey = std::pair<std::string, std::string>;

    VulnDatabase() = default;
    /// Throws FeedError(DuplicateCveId) on a repeated id.
    explicit VulnDatabase(std::vector<CveRecord> records);

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const std::map<std::string, CveRecord>& records() const noexcept { return records_; }
    const std::map<ProductKey, std::vector<CriterionRef>>& product_index() const noexcept {
        return product_index_;
    }
    const std::vector<CriterionRef>& wildcard_index() const noexcept { return wildcard_index_; }
    const CveRecord* find(std::string_view cve_id) const;

    /// Records with at least one criterion matching `component`, sorted by id.
    std::vector<const CveRecord*> find_cves(const cpe::CpeName& component,
                                            const cpe::MatchOptions& options = {}) const;

    /// Distinct concrete pattern versions and range endpoints for the product,
    /// ascending under compare_versions.
    std::vector<std::string> list_versions(std::string_view vendor, std::string_view product) const;

private:
    std::map<std::string, CveRecord> records_;
    std::map<ProductKey, std::vector<CriterionRef>> product_index_;
    std::vector<CriterionRef> wildcard_index_;
};

VulnDatabase parse_feed(std::string_view json_text);
VulnDatabase ingest_feed(const std::filesystem::path& file);

}  // namespace unibom::vulndb
