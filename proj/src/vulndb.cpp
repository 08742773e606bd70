#include "unibom/vulndb.hpp"

#include "unibom/classify.hpp"
#include "unibom/fsutil.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

namespace unibom::vulndb {

using nlohmann::json;

std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::None: return "none";
        case Severity::Low: return "low";
        case Severity::Medium: return "medium";
        case Severity::High: return "high";
        case Severity::Critical: return "critical";
        case Severity::Unknown: return "unknown";
    }
    return "unknown";
}

std::optional<Severity> severity_from_string(std::string_view s) {
    std::string lower(s);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (auto sev : {Severity::None, Severity::Low, Severity::Medium, Severity::High,
                     Severity::Critical, Severity::Unknown}) {
        if (to_string(sev) == lower) return sev;
    }
    return std::nullopt;
}

bool is_valid_cve_id(std::string_view id) {
    static const std::regex pattern(R"(CVE-\d{4}-\d{4,})");
    return std::regex_match(id.begin(), id.end(), pattern);
}

VulnDatabase::VulnDatabase(std::vector<CveRecord> records) {
    for (auto& r : records) {
        auto id = r.cve_id;
        if (!records_.emplace(id, std::move(r)).second) {
            throw FeedError(FeedErrc::DuplicateCveId, "duplicate CVE id " + id);
        }
    }
    for (const auto& [id, record] : records_) {
        for (std::size_t i = 0; i < record.criteria.size(); ++i) {
            const auto& p = record.criteria[i].pattern;
            if (p.vendor.is_literal() && p.product.is_literal()) {
                product_index_[{p.vendor.text(), p.product.text()}].push_back({id, i});
            } else {
                wildcard_index_.push_back({id, i});
            }
        }
    }
}

const CveRecord* VulnDatabase::find(std::string_view cve_id) const {
    auto it = records_.find(std::string(cve_id));
    return it == records_.end() ? nullptr : &it->second;
}

std::vector<const CveRecord*> VulnDatabase::find_cves(const cpe::CpeName& component,
                                                      const cpe::MatchOptions& options) const {
    std::set<std::string> hits;
    auto scan = [&](const std::vector<CriterionRef>& refs) {
        for (const auto& ref : refs) {
            if (hits.contains(ref.cve_id)) continue;
            const auto& criterion = records_.at(ref.cve_id).criteria[ref.criterion_index];
            if (cpe::match_cpe(component, criterion, options)) hits.insert(ref.cve_id);
        }
    };
    if (component.vendor.is_literal() && component.product.is_literal()) {
        auto it = product_index_.find({component.vendor.text(), component.product.text()});
        if (it != product_index_.end()) scan(it->second);
    } else {
        // Non-literal vendor/product can match patterns under any key.
        for (const auto& [key, refs] : product_index_) scan(refs);
    }
    scan(wildcard_index_);

    std::vector<const CveRecord*> out;
    out.reserve(hits.size());
    for (const auto& id : hits) out.push_back(&records_.at(id));
    return out;
}

std::vector<std::string> VulnDatabase::list_versions(std::string_view vendor,
                                                     std::string_view product) const {
    auto it = product_index_.find({cpe::AttributeValue::literal(vendor).text(),
                                   cpe::AttributeValue::literal(product).text()});
    if (it == product_index_.end()) return {};

    std::vector<std::string> versions;
    auto add = [&](const std::string& v) {
        if (!v.empty()) versions.push_back(v);
    };
    for (const auto& ref : it->second) {
        const auto& c = records_.at(ref.cve_id).criteria[ref.criterion_index];
        if (c.pattern.version.is_literal()) add(c.pattern.version.text());
        if (c.version_start) add(c.version_start->version);
        if (c.version_end) add(c.version_end->version);
    }
    std::stable_sort(versions.begin(), versions.end(), [](const auto& a, const auto& b) {
        return cpe::compare_versions(a, b) < 0;
    });
    versions.erase(std::unique(versions.begin(), versions.end(),
                               [](const auto& a, const auto& b) {
                                   return cpe::compare_versions(a, b) == 0;
                               }),
                   versions.end());
    return versions;
}

namespace {

[[noreturn]] void malformed(const std::string& what) {
    throw FeedError(FeedErrc::MalformedFeed, what);
}

std::string require_string(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) malformed(where + ": missing string field '" + key + "'");
    return it->get<std::string>();
}

cpe::MatchCriterion parse_criterion(const json& j, const std::string& where) {
    if (!j.is_object()) malformed(where + ": criterion is not an object");
    cpe::MatchCriterion c;
    try {
        c.pattern = cpe::parse_cpe(require_string(j, "cpe23", where));
    } catch (const cpe::CpeError& e) {
        malformed(where + ": " + e.what());
    }
    auto bound = [&](const char* incl, const char* excl) -> std::optional<cpe::VersionBound> {
        bool has_incl = j.contains(incl), has_excl = j.contains(excl);
        if (has_incl && has_excl) malformed(where + ": both " + incl + " and " + excl);
        if (!has_incl && !has_excl) return std::nullopt;
        auto v = require_string(j, has_incl ? incl : excl, where);
        if (v.empty()) malformed(where + ": empty version bound");
        return cpe::VersionBound{v, has_incl};
    };
    c.version_start = bound("versionStartIncluding", "versionStartExcluding");
    c.version_end = bound("versionEndIncluding", "versionEndExcluding");
    if (c.has_range() && !c.pattern.version.is_any()) {
        malformed(where + ": version range requires a '*' pattern version");
    }
    return c;
}

CveRecord parse_record(const json& j, std::size_t index) {
    std::string where = "record " + std::to_string(index);
    if (!j.is_object()) malformed(where + ": not an object");
    CveRecord r;
    r.cve_id = require_string(j, "cveId", where);
    where += " (" + r.cve_id + ")";
    if (!is_valid_cve_id(r.cve_id)) malformed(where + ": invalid CVE id");

    if (auto d = j.find("description"); d != j.end() && d->is_string()) r.description = *d;

    if (auto cwes = j.find("cwes"); cwes != j.end()) {
        if (!cwes->is_array()) malformed(where + ": cwes is not an array");
        for (const auto& cwe : *cwes) {
            if (!cwe.is_string()) malformed(where + ": cwe id is not a string");
            r.cwe_ids.push_back(cwe.get<std::string>());
        }
    }

    if (auto s = j.find("baseScore"); s != j.end() && !s->is_null()) {
        if (!s->is_number()) malformed(where + ": baseScore is not a number");
        double score = s->get<double>();
        if (score < 0.0 || score > 10.0) malformed(where + ": baseScore outside [0, 10]");
        r.base_score = score;
    }
    std::optional<Severity> stated;
    if (auto s = j.find("baseSeverity"); s != j.end() && !s->is_null()) {
        if (!s->is_string()) malformed(where + ": baseSeverity is not a string");
        stated = severity_from_string(s->get<std::string>());
        if (!stated) malformed(where + ": unknown baseSeverity");
    }
    if (stated) {
        r.base_severity = *stated;
    } else {
        r.base_severity = classify::severity_bucket(r.base_score);
    }

    if (auto p = j.find("published"); p != j.end() && p->is_string()) {
        auto text = p->get<std::string>();
        if (text.size() >= 4 && std::all_of(text.begin(), text.begin() + 4, ::isdigit)) {
            r.published_year = std::stoi(text.substr(0, 4));
        }
    }
    if (r.published_year == 0) r.published_year = std::stoi(r.cve_id.substr(4, 4));

    if (auto crit = j.find("criteria"); crit != j.end()) {
        if (!crit->is_array()) malformed(where + ": criteria is not an array");
        for (const auto& c : *crit) r.criteria.push_back(parse_criterion(c, where));
    }
    return r;
}

}  // namespace

VulnDatabase parse_feed(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        malformed(std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_array()) malformed("feed root must be an array of records");
    std::vector<CveRecord> records;
    records.reserve(root.size());
    for (std::size_t i = 0; i < root.size(); ++i) records.push_back(parse_record(root[i], i));
    return VulnDatabase(std::move(records));
}

VulnDatabase ingest_feed(const std::filesystem::path& file) {
    return parse_feed(read_file(file));
}

}  // namespace unibom::vulndb
