#include "unibom/bundled.hpp"
#include "unibom/classify.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>
#include <sstream>

namespace unibom::classify {

std::string_view to_string(MemoryClass c) {
    switch (c) {
        case MemoryClass::NotMemory: return "not-memory";
        case MemoryClass::Spatial: return "spatial";
        case MemoryClass::Temporal: return "temporal";
        case MemoryClass::OtherMemory: return "other-memory";
        case MemoryClass::Unknown: return "unknown";
    }
    return "unknown";
}

std::optional<MemoryClass> memory_class_from_string(std::string_view s) {
    for (auto c : {MemoryClass::NotMemory, MemoryClass::Spatial, MemoryClass::Temporal,
                   MemoryClass::OtherMemory, MemoryClass::Unknown}) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

bool is_memory_related(MemoryClass c) {
    return c == MemoryClass::Spatial || c == MemoryClass::Temporal || c == MemoryClass::OtherMemory;
}

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::RuleTable: return "rule-table";
        case Provenance::KeywordHeuristic: return "keyword-heuristic";
        case Provenance::NoEvidence: return "no-evidence";
        case Provenance::ExternalModel: return "external-model";
        case Provenance::Cache: return "cache";
        case Provenance::Fallback: return "fallback";
    }
    return "no-evidence";
}

Severity severity_bucket(std::optional<double> base_score) {
    if (!base_score) return Severity::Unknown;
    double s = *base_score;
    if (!(s >= 0.0 && s <= 10.0)) {
        throw ClassifyError(ClassifyErrc::OutOfRange,
                            "base score outside [0.0, 10.0]: " + std::to_string(s));
    }
    if (s == 0.0) return Severity::None;
    if (s < 4.0) return Severity::Low;
    if (s < 7.0) return Severity::Medium;
    if (s < 9.0) return Severity::High;
    return Severity::Critical;
}

int severity_rank(Severity s) {
    switch (s) {
        case Severity::Unknown: return -1;
        case Severity::None: return 0;
        case Severity::Low: return 1;
        case Severity::Medium: return 2;
        case Severity::High: return 3;
        case Severity::Critical: return 4;
    }
    return -1;
}

bool is_valid_cwe_id(std::string_view id) {
    static const std::regex pattern(R"((NVD-)?CWE-(\d+|noinfo|Other))");
    return std::regex_match(id.begin(), id.end(), pattern);
}

int memory_priority(MemoryClass c) {
    switch (c) {
        case MemoryClass::Spatial: return 4;
        case MemoryClass::Temporal: return 3;
        case MemoryClass::OtherMemory: return 2;
        case MemoryClass::NotMemory: return 1;
        case MemoryClass::Unknown: return 0;
    }
    return 0;
}

CweRuleTable CweRuleTable::parse(std::string_view text) {
    CweRuleTable table;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string id, cls;
        if (!(fields >> id)) continue;
        if (!(fields >> cls) || !is_valid_cwe_id(id)) {
            throw ClassifyError(ClassifyErrc::BadRuleTable,
                                "rule table line " + std::to_string(lineno) + ": expected 'CWE-<n> <class>'");
        }
        auto mc = memory_class_from_string(cls);
        if (!mc) {
            throw ClassifyError(ClassifyErrc::BadRuleTable,
                                "rule table line " + std::to_string(lineno) + ": unknown class " + cls);
        }
        table.entries_[id] = *mc;
    }
    return table;
}

const CweRuleTable& CweRuleTable::bundled() {
    static const CweRuleTable table = parse(unibom::bundled::cwe_table());
    return table;
}

std::optional<MemoryClass> CweRuleTable::lookup(std::string_view cwe_id) const {
    auto it = entries_.find(std::string(cwe_id));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

MemoryClass classify_description(std::string_view description) {
    std::string text(description);
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    auto any_of = [&](std::initializer_list<std::string_view> words) {
        return std::any_of(words.begin(), words.end(),
                           [&](std::string_view w) { return text.find(w) != std::string::npos; });
    };
    if (any_of({"buffer", "bounds", "overflow", "underflow", "over-read", "overread"})) {
        return MemoryClass::Spatial;
    }
    if (any_of({"use-after-free", "use after free", "double-free", "double free", "dangling"})) {
        return MemoryClass::Temporal;
    }
    if (any_of({"uninitialized", "uninitialised", "leak", "allocation"})) {
        return MemoryClass::OtherMemory;
    }
    return MemoryClass::NotMemory;
}

Classification RuleEngine::classify(std::string_view identifier,
                                    std::optional<std::string_view> description) {
    if (auto hit = table_->lookup(identifier)) return {*hit, Provenance::RuleTable, {}};
    if (description && !description->empty()) {
        return {classify_description(*description), Provenance::KeywordHeuristic, {}};
    }
    return {MemoryClass::Unknown, Provenance::NoEvidence, {}};
}

MemoryClass classify_cwe(std::string_view cwe_id, std::optional<std::string_view> description,
                         ClassifierPort& port) {
    if (!is_valid_cwe_id(cwe_id)) {
        throw ClassifyError(ClassifyErrc::InvalidCweId, "not a CWE id: " + std::string(cwe_id));
    }
    return port.classify(cwe_id, description).memory_class;
}

MemoryClass classify_cve(const vulndb::CveRecord& record, ClassifierPort& port) {
    std::optional<std::string_view> description;
    if (!record.description.empty()) description = record.description;
    if (record.cwe_ids.empty()) return port.classify("CWE-noinfo", description).memory_class;

    auto best = MemoryClass::Unknown;
    for (const auto& cwe : record.cwe_ids) {
        auto c = port.classify(cwe, description).memory_class;
        if (memory_priority(c) > memory_priority(best)) best = c;
    }
    return best;
}

}  // namespace unibom::classify
