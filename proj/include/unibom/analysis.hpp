#pragma once

#include "unibom/classify.hpp"
#include "unibom/sbom.hpp"
#include "unibom/vulndb.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace unibom::analysis {

using classify::MemoryClass;
using vulndb::Severity;

std::string nvd_url(std::string_view cve_id);

struct Finding {
    sbom::Component component;
    std::string cve_id;
    std::vector<std::string> cwe_ids;
    std::optional<double> base_score;
    Severity severity = Severity::Unknown;
    MemoryClass memory_class = MemoryClass::Unknown;
    std::string nvd_url;
};

struct VulnerabilityReport {
    std::string sbom_ref;
    std::vector<Finding> findings;
    std::map<Severity, std::size_t> counts_by_severity;      // every bucket present
    std::map<MemoryClass, std::size_t> counts_by_memory;     // every class present
};

struct AnalysisOptions {
    cpe::MatchOptions match;
};

VulnerabilityReport analyze_sbom(const sbom::SbomDocument& doc, const vulndb::VulnDatabase& db,
                                 classify::ClassifierPort& port, const AnalysisOptions& options = {});

struct HistoryRow {
    std::string version;
    std::string cve_id;
    std::string cwe_id;
    MemoryClass memory_class = MemoryClass::Unknown;
};

struct HistoryReport {
    std::string vendor;
    std::string product;
    std::vector<HistoryRow> rows;  // version-ascending, then cve_id
};

/// One row per (version, CVE, CWE) over every version the database knows for
/// the product. A CVE without CWEs yields one row with `CWE-noinfo`.
HistoryReport history(std::string_view vendor, std::string_view product,
                      const vulndb::VulnDatabase& db, classify::ClassifierPort& port, char part = 'a');

struct ComparisonRow {
    std::string name;
    std::string version_a;  // "none" when absent
    std::string version_b;
    std::vector<std::string> cves_a;
    std::vector<std::string> cves_b;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;  // sorted by name
};

ComparisonReport compare(const sbom::SbomDocument& a, const sbom::SbomDocument& b,
                         const vulndb::VulnDatabase& db, classify::ClassifierPort& port,
                         const AnalysisOptions& options = {});

struct WhatIfReport {
    Severity threshold = Severity::Medium;
    std::size_t eliminated_total = 0;
    std::map<Severity, std::size_t> eliminated_by_severity;
    std::size_t residual_total = 0;
};

/// Findings that a memory-safe platform would remove: any memory class,
/// at or above `threshold`.
WhatIfReport whatif_memory_safe(const VulnerabilityReport& report,
                                Severity threshold = Severity::Medium);

struct SeriesPoint {
    std::string version;
    std::size_t cve_count = 0;
    std::optional<double> mean_base_score;  // nullopt when no CVE has a score
};

std::vector<SeriesPoint> time_series(const HistoryReport& history, const vulndb::VulnDatabase& db);

struct ParetoBucket {
    std::string label;
    std::size_t count = 0;
    std::size_t cumulative = 0;
};

/// Nonzero buckets in the order critical, high, medium, low, none/unknown.
std::vector<ParetoBucket> pareto(const std::map<Severity, std::size_t>& counts);
std::vector<ParetoBucket> pareto(const VulnerabilityReport& report);

/// Severity counts over the distinct (version, CVE) pairs of a history.
std::map<Severity, std::size_t> history_severity_counts(const HistoryReport& history,
                                                        const vulndb::VulnDatabase& db);

// JSON shapes shared by the CLI `--json` output and the HTTP API.
nlohmann::json to_json(const Finding& f);
nlohmann::json to_json(const VulnerabilityReport& r);
nlohmann::json to_json(const HistoryReport& h);
nlohmann::json to_json(const ComparisonReport& c);
nlohmann::json to_json(const WhatIfReport& w);
nlohmann::json to_json(const std::vector<SeriesPoint>& series);
nlohmann::json to_json(const std::vector<ParetoBucket>& buckets);

/// {"history": ..., "time_series": ..., "pareto": ...}
nlohmann::json history_payload(const HistoryReport& h, const vulndb::VulnDatabase& db);

// Aligned text tables for the CLI.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);
std::string render(const VulnerabilityReport& r);
std::string render(const HistoryReport& h);
std::string render(const ComparisonReport& c);
std::string render(const WhatIfReport& w);

}  // namespace unibom::analysis
