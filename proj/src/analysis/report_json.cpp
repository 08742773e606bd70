#include "unibom/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace unibom::analysis {

using nlohmann::json;

namespace {

json score_json(std::optional<double> s) {
    return s ? json(*s) : json(nullptr);
}

template <typename Key, typename Fn>
json counts_json(const std::map<Key, std::size_t>& counts, Fn label) {
    json j = json::object();
    for (const auto& [k, v] : counts) j[std::string(label(k))] = v;
    return j;
}

std::string format_score(std::optional<double> s) {
    if (!s) return "-";
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(1);
    ss << *s;
    return ss.str();
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (const auto& i : items) {
        if (!out.empty()) out += sep;
        out += i;
    }
    return out;
}

}  // namespace

json to_json(const Finding& f) {
    json component = {
        {"name", f.component.name},
        {"version", f.component.version_or_unknown()},
        {"cpe", cpe::format_cpe(f.component.effective_cpe())},
        {"source", sbom::to_string(f.component.source)},
    };
    return {
        {"component", std::move(component)},
        {"cve_id", f.cve_id},
        {"cwe_ids", f.cwe_ids},
        {"base_score", score_json(f.base_score)},
        {"severity", vulndb::to_string(f.severity)},
        {"memory_class", classify::to_string(f.memory_class)},
        {"nvd_url", f.nvd_url},
    };
}

json to_json(const VulnerabilityReport& r) {
    json findings = json::array();
    for (const auto& f : r.findings) findings.push_back(to_json(f));
    return {
        {"sbom_ref", r.sbom_ref},
        {"findings", std::move(findings)},
        {"counts_by_severity", counts_json(r.counts_by_severity, [](Severity s) { return vulndb::to_string(s); })},
        {"counts_by_memory", counts_json(r.counts_by_memory, [](MemoryClass c) { return classify::to_string(c); })},
    };
}

json to_json(const HistoryReport& h) {
    json rows = json::array();
    for (const auto& r : h.rows) {
        rows.push_back({{"version", r.version},
                        {"cve_id", r.cve_id},
                        {"cwe_id", r.cwe_id},
                        {"memory_class", classify::to_string(r.memory_class)}});
    }
    return {{"vendor", h.vendor}, {"product", h.product}, {"rows", std::move(rows)}};
}

json to_json(const ComparisonReport& c) {
    json rows = json::array();
    for (const auto& r : c.rows) {
        rows.push_back({{"name", r.name},
                        {"version_a", r.version_a},
                        {"version_b", r.version_b},
                        {"cves_a", r.cves_a},
                        {"cves_b", r.cves_b}});
    }
    return {{"rows", std::move(rows)}};
}

json to_json(const WhatIfReport& w) {
    return {
        {"threshold", vulndb::to_string(w.threshold)},
        {"eliminated_total", w.eliminated_total},
        {"eliminated_by_severity",
         counts_json(w.eliminated_by_severity, [](Severity s) { return vulndb::to_string(s); })},
        {"residual_total", w.residual_total},
    };
}

json to_json(const std::vector<SeriesPoint>& series) {
    json out = json::array();
    for (const auto& p : series) {
        out.push_back({{"version", p.version},
                       {"cve_count", p.cve_count},
                       {"mean_base_score", score_json(p.mean_base_score)}});
    }
    return out;
}

json to_json(const std::vector<ParetoBucket>& buckets) {
    json out = json::array();
    for (const auto& b : buckets) {
        out.push_back({{"severity", b.label}, {"count", b.count}, {"cumulative", b.cumulative}});
    }
    return out;
}

json history_payload(const HistoryReport& h, const vulndb::VulnDatabase& db) {
    return {
        {"history", to_json(h)},
        {"time_series", to_json(time_series(h, db))},
        {"pareto", to_json(pareto(history_severity_counts(h, db)))},
    };
}

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) widths[i] = header[i].size();
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size() && i < widths.size(); ++i) {
            widths[i] = std::max(widths[i], row[i].size());
        }
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < widths.size(); ++i) {
            const std::string& cell = i < cells.size() ? cells[i] : std::string();
            out << cell;
            if (i + 1 < widths.size()) out << std::string(widths[i] - cell.size() + 2, ' ');
        }
        out << '\n';
    };
    emit(header);
    std::vector<std::string> rule;
    for (auto w : widths) rule.emplace_back(w, '-');
    emit(rule);
    for (const auto& row : rows) emit(row);
    return out.str();
}

std::string render(const VulnerabilityReport& r) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& f : r.findings) {
        rows.push_back({f.component.name, f.component.version_or_unknown(), f.cve_id,
                        join(f.cwe_ids, ","), format_score(f.base_score),
                        std::string(vulndb::to_string(f.severity)),
                        std::string(classify::to_string(f.memory_class))});
    }
    std::ostringstream out;
    out << render_table({"COMPONENT", "VERSION", "CVE", "CWE", "SCORE", "SEVERITY", "MEMORY"}, rows);
    out << "\n" << r.findings.size() << " finding(s):";
    for (auto s : {Severity::Critical, Severity::High, Severity::Medium, Severity::Low,
                   Severity::None, Severity::Unknown}) {
        out << ' ' << vulndb::to_string(s) << '=' << r.counts_by_severity.at(s);
    }
    out << '\n';
    return out.str();
}

std::string render(const HistoryReport& h) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : h.rows) {
        rows.push_back({format_cpe(cpe::CpeName::make('a', h.vendor, h.product, r.version)), r.cve_id,
                        r.cwe_id, std::string(classify::to_string(r.memory_class))});
    }
    return render_table({"CPE", "CVE", "CWE", "MEMORY CLASS"}, rows);
}

std::string render(const ComparisonReport& c) {
    std::vector<std::vector<std::string>> versions, vulns;
    auto cves = [](const std::string& version, const std::vector<std::string>& ids) {
        if (version == "none") return std::string("none");
        return ids.empty() ? std::string("-") : join(ids, ", ");
    };
    for (const auto& r : c.rows) {
        versions.push_back({r.name, r.version_a, r.version_b});
        vulns.push_back({r.name, cves(r.version_a, r.cves_a), cves(r.version_b, r.cves_b)});
    }
    return "Version information\n" + render_table({"COMPONENT", "SBOM-1", "SBOM-2"}, versions) +
           "\nVulnerabilities\n" + render_table({"COMPONENT", "SBOM-1", "SBOM-2"}, vulns);
}

std::string render(const WhatIfReport& w) {
    std::ostringstream out;
    out << "A memory-safe platform would eliminate " << w.eliminated_total
        << " finding(s) at severity >= " << vulndb::to_string(w.threshold) << " (";
    bool first = true;
    for (auto s : {Severity::Critical, Severity::High, Severity::Medium, Severity::Low}) {
        if (!first) out << ", ";
        first = false;
        out << vulndb::to_string(s) << '=' << w.eliminated_by_severity.at(s);
    }
    out << "); " << w.residual_total << " remain.\n";
    return out.str();
}

}  // namespace unibom::analysis
