#include "unibom/analysis.hpp"

#include <algorithm>
#include <set>

namespace unibom::analysis {

namespace {

constexpr Severity kAllSeverities[] = {Severity::None, Severity::Low, Severity::Medium,
                                       Severity::High, Severity::Critical, Severity::Unknown};
constexpr MemoryClass kAllClasses[] = {MemoryClass::NotMemory, MemoryClass::Spatial,
                                       MemoryClass::Temporal, MemoryClass::OtherMemory,
                                       MemoryClass::Unknown};

Severity finding_severity(const vulndb::CveRecord& r) {
    if (r.base_score) return classify::severity_bucket(r.base_score);
    return r.base_severity;
}

bool version_less(const std::string& a, const std::string& b) {
    auto c = cpe::compare_versions(a, b);
    return c != 0 ? c < 0 : a < b;
}

}  // namespace

std::string nvd_url(std::string_view cve_id) {
    return "https://nvd.nist.gov/vuln/detail/" + std::string(cve_id);
}

VulnerabilityReport analyze_sbom(const sbom::SbomDocument& doc, const vulndb::VulnDatabase& db,
                                 classify::ClassifierPort& port, const AnalysisOptions& options) {
    VulnerabilityReport report;
    report.sbom_ref = doc.target_name;
    for (auto s : kAllSeverities) report.counts_by_severity[s] = 0;
    for (auto c : kAllClasses) report.counts_by_memory[c] = 0;

    for (const auto& component : doc.components) {
        for (const auto* record : db.find_cves(component.effective_cpe(), options.match)) {
            Finding f;
            f.component = component;
            f.cve_id = record->cve_id;
            f.cwe_ids = record->cwe_ids;
            f.base_score = record->base_score;
            f.severity = finding_severity(*record);
            f.memory_class = classify::classify_cve(*record, port);
            f.nvd_url = nvd_url(record->cve_id);
            ++report.counts_by_severity[f.severity];
            ++report.counts_by_memory[f.memory_class];
            report.findings.push_back(std::move(f));
        }
    }
    return report;
}

HistoryReport history(std::string_view vendor, std::string_view product,
                      const vulndb::VulnDatabase& db, classify::ClassifierPort& port, char part) {
    HistoryReport h;
    h.vendor = cpe::AttributeValue::literal(vendor).text();
    h.product = cpe::AttributeValue::literal(product).text();
    for (const auto& version : db.list_versions(vendor, product)) {
        auto name = cpe::CpeName::make(part, vendor, product, version);
        for (const auto* record : db.find_cves(name)) {
            std::optional<std::string_view> description;
            if (!record->description.empty()) description = record->description;
            std::vector<std::string> cwes = record->cwe_ids;
            if (cwes.empty()) cwes.push_back("CWE-noinfo");
            for (const auto& cwe : cwes) {
                h.rows.push_back({version, record->cve_id, cwe, port.classify(cwe, description).memory_class});
            }
        }
    }
    // list_versions is already ascending and find_cves sorted by id; keep that
    // order stable through the per-CWE expansion.
    return h;
}

ComparisonReport compare(const sbom::SbomDocument& a, const sbom::SbomDocument& b,
                         const vulndb::VulnDatabase& db, classify::ClassifierPort& port,
                         const AnalysisOptions& options) {
    struct Side {
        std::vector<std::string> versions;
        std::set<std::string> cves;
    };
    auto collect = [&](const sbom::SbomDocument& doc) {
        std::map<std::string, Side> sides;
        for (const auto& c : doc.components) {
            auto& s = sides[c.name];
            auto v = c.version_or_unknown();
            if (std::find(s.versions.begin(), s.versions.end(), v) == s.versions.end()) {
                s.versions.push_back(v);
            }
        }
        for (const auto& f : analyze_sbom(doc, db, port, options).findings) {
            sides[f.component.name].cves.insert(f.cve_id);
        }
        return sides;
    };
    auto side_a = collect(a);
    auto side_b = collect(b);

    std::set<std::string> names;
    for (const auto& [n, _] : side_a) names.insert(n);
    for (const auto& [n, _] : side_b) names.insert(n);

    auto version_column = [](const std::map<std::string, Side>& sides, const std::string& name) {
        auto it = sides.find(name);
        if (it == sides.end()) return std::string("none");
        auto versions = it->second.versions;
        std::sort(versions.begin(), versions.end(), version_less);
        std::string out;
        for (const auto& v : versions) out += (out.empty() ? "" : ", ") + v;
        return out;
    };
    auto cve_column = [](const std::map<std::string, Side>& sides, const std::string& name) {
        auto it = sides.find(name);
        if (it == sides.end()) return std::vector<std::string>{};
        return std::vector<std::string>(it->second.cves.begin(), it->second.cves.end());
    };

    ComparisonReport report;
    for (const auto& name : names) {
        report.rows.push_back({name, version_column(side_a, name), version_column(side_b, name),
                               cve_column(side_a, name), cve_column(side_b, name)});
    }
    return report;
}

WhatIfReport whatif_memory_safe(const VulnerabilityReport& report, Severity threshold) {
    WhatIfReport w;
    w.threshold = threshold;
    for (auto s : kAllSeverities) w.eliminated_by_severity[s] = 0;
    const int gate = classify::severity_rank(threshold);
    for (const auto& f : report.findings) {
        const int rank = classify::severity_rank(f.severity);
        if (classify::is_memory_related(f.memory_class) && rank >= gate && rank > 0) {
            ++w.eliminated_total;
            ++w.eliminated_by_severity[f.severity];
        } else {
            ++w.residual_total;
        }
    }
    return w;
}

std::vector<SeriesPoint> time_series(const HistoryReport& history, const vulndb::VulnDatabase& db) {
    std::vector<SeriesPoint> series;
    std::set<std::string> seen;  // cve ids within the current version
    double sum = 0;
    std::size_t scored = 0;
    auto close = [&] {
        if (series.empty()) return;
        if (scored > 0) series.back().mean_base_score = sum / static_cast<double>(scored);
    };
    for (const auto& row : history.rows) {
        if (series.empty() || series.back().version != row.version) {
            close();
            series.push_back({row.version, 0, std::nullopt});
            seen.clear();
            sum = 0;
            scored = 0;
        }
        if (!seen.insert(row.cve_id).second) continue;
        ++series.back().cve_count;
        if (const auto* r = db.find(row.cve_id); r && r->base_score) {
            sum += *r->base_score;
            ++scored;
        }
    }
    close();
    return series;
}

std::map<Severity, std::size_t> history_severity_counts(const HistoryReport& history,
                                                        const vulndb::VulnDatabase& db) {
    std::map<Severity, std::size_t> counts;
    for (auto s : kAllSeverities) counts[s] = 0;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& row : history.rows) {
        if (!seen.emplace(row.version, row.cve_id).second) continue;
        const auto* r = db.find(row.cve_id);
        ++counts[r ? finding_severity(*r) : Severity::Unknown];
    }
    return counts;
}

std::vector<ParetoBucket> pareto(const std::map<Severity, std::size_t>& counts) {
    auto count_of = [&](Severity s) {
        auto it = counts.find(s);
        return it == counts.end() ? std::size_t{0} : it->second;
    };
    const std::pair<const char*, std::size_t> ordered[] = {
        {"critical", count_of(Severity::Critical)},
        {"high", count_of(Severity::High)},
        {"medium", count_of(Severity::Medium)},
        {"low", count_of(Severity::Low)},
        {"none/unknown", count_of(Severity::None) + count_of(Severity::Unknown)},
    };
    std::vector<ParetoBucket> out;
    std::size_t running = 0;
    for (const auto& [label, count] : ordered) {
        if (count == 0) continue;
        running += count;
        out.push_back({label, count, running});
    }
    return out;
}

std::vector<ParetoBucket> pareto(const VulnerabilityReport& report) {
    return pareto(report.counts_by_severity);
}

}  // namespace unibom::analysis
