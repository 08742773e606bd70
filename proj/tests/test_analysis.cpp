#include "unibom/analysis.hpp"

#include "support.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace unibom;
using namespace unibom::analysis;
using classify::RuleEngine;
using vulndb::VulnDatabase;

namespace {

VulnDatabase feed(const char* name) { return vulndb::ingest_feed(testsupport::fixture_path(name)); }
sbom::SbomDocument doc(const char* name) { return sbom::load_sbom(testsupport::fixture_path(name)); }

// Plain filter over findings.
std::size_t brute_whatif(const VulnerabilityReport& r, Severity threshold) {
    std::size_t n = 0;
    for (const auto& f : r.findings) {
        if (classify::is_memory_related(f.memory_class) &&
            classify::severity_rank(f.severity) >= classify::severity_rank(threshold)) {
            ++n;
        }
    }
    return n;
}

}  // namespace

TEST_CASE("busybox 1.33.2 findings") {
    auto db = feed("feed-min.json");
    RuleEngine rules;
    auto r = analyze_sbom(doc("busybox.sbom.json"), db, rules);
    std::map<std::string, std::vector<std::string>> got;
    for (const auto& f : r.findings) {
        got[f.cve_id] = f.cwe_ids;
        CHECK(f.nvd_url == "https://nvd.nist.gov/vuln/detail/" + f.cve_id);
        CHECK(f.component.name == "busybox");
    }
    const std::map<std::string, std::vector<std::string>> want = {
        {"CVE-2021-42376", {"CWE-476"}},
        {"CVE-2022-48174", {"CWE-787"}},
        {"CVE-2023-39810", {"CWE-22"}},
        {"CVE-2022-28391", {"CWE-noinfo"}},
    };
    CHECK(got == want);
    std::size_t total = 0;
    for (const auto& [s, n] : r.counts_by_severity) total += n;
    CHECK(total == 4);
    CHECK(r.counts_by_severity.size() == 6);
    CHECK(r.counts_by_memory.size() == 5);
}

TEST_CASE("openssl history") {
    auto db = feed("feed-min.json");
    RuleEngine rules;
    auto h = history("openssl", "openssl", db, rules);
    std::vector<std::string> versions;
    std::map<std::string, std::set<std::tuple<std::string, std::string, std::string>>> by_version;
    for (const auto& r : h.rows) {
        if (versions.empty() || versions.back() != r.version) versions.push_back(r.version);
        by_version[r.version].insert({r.cve_id, r.cwe_id, std::string(classify::to_string(r.memory_class))});
    }
    CHECK(versions == std::vector<std::string>{"0.9.2b", "0.9.6d", "1.1.1"});
    using T = std::tuple<std::string, std::string, std::string>;
    CHECK(by_version["0.9.2b"] == std::set<T>{{"CVE-2014-8176", "CWE-119", "spatial"}});
    CHECK(by_version["0.9.6d"] == std::set<T>{{"CVE-2016-2106", "CWE-189", "spatial"}});
    CHECK(by_version["1.1.1"] == std::set<T>{{"CVE-2021-3712", "CWE-125", "spatial"},
                                             {"CVE-2022-4450", "CWE-415", "temporal"},
                                             {"CVE-2021-3449", "CWE-476", "spatial"}});
    for (std::size_t i = 1; i < h.rows.size(); ++i) {
        const auto& a = h.rows[i - 1];
        const auto& b = h.rows[i];
        auto c = cpe::compare_versions(a.version, b.version);
        CHECK((c < 0 || (c == 0 && a.cve_id <= b.cve_id)));
    }

    auto series = time_series(h, db);
    std::vector<std::size_t> counts;
    for (const auto& p : series) counts.push_back(p.cve_count);
    CHECK(counts == std::vector<std::size_t>{1, 1, 3});

    auto buckets = pareto(history_severity_counts(h, db));
    std::size_t running = 0;
    for (const auto& b : buckets) {
        CHECK(b.count > 0);
        running += b.count;
        CHECK(b.cumulative == running);
    }
    CHECK(running == 5);
}

TEST_CASE("history of an unknown product is empty") {
    auto db = feed("feed-min.json");
    RuleEngine rules;
    CHECK(history("nobody", "nothing", db, rules).rows.empty());
}

TEST_CASE("sbom comparison") {
    auto db = feed("feed-compare.json");
    RuleEngine rules;
    auto c = compare(doc("sbom-1.json"), doc("sbom-2.json"), db, rules);
    REQUIRE(c.rows.size() == 3);
    std::map<std::string, ComparisonRow> rows;
    for (const auto& r : c.rows) rows[r.name] = r;
    CHECK(rows["openssl"].version_a == "3.0.0");
    CHECK(rows["openssl"].version_b == "none");
    CHECK(rows["kernel"].version_a == "2.24.2");
    CHECK(rows["kernel"].version_b == "2.24.2");
    CHECK(rows["sqlite"].version_a == "none");
    CHECK(rows["sqlite"].version_b == "3.5.9");

    auto has = [](const std::vector<std::string>& v, const char* id) {
        return std::find(v.begin(), v.end(), id) != v.end();
    };
    CHECK(has(rows["openssl"].cves_a, "CVE-2009-1390"));
    CHECK(rows["openssl"].cves_b.empty());
    CHECK(has(rows["kernel"].cves_a, "CVE-2014-9114"));
    CHECK(has(rows["kernel"].cves_b, "CVE-2016-2779"));
    CHECK(rows["sqlite"].cves_a.empty());
    CHECK(has(rows["sqlite"].cves_b, "CVE-2015-3414"));
    CHECK(c.rows[0].name < c.rows[1].name);
    CHECK(c.rows[1].name < c.rows[2].name);
}

TEST_CASE("what-if on the engineered report") {
    auto db = feed("feed-whatif.json");
    RuleEngine rules;
    auto r = analyze_sbom(doc("whatif.sbom.json"), db, rules);
    CHECK(r.findings.size() == 52);
    auto w = whatif_memory_safe(r);
    CHECK(w.threshold == Severity::Medium);
    CHECK(w.eliminated_total == 42);
    CHECK(w.residual_total == 10);
    for (auto t : {Severity::Low, Severity::Medium, Severity::High, Severity::Critical}) {
        auto x = whatif_memory_safe(r, t);
        CHECK(x.eliminated_total == brute_whatif(r, t));
        CHECK(x.eliminated_total + x.residual_total == r.findings.size());
        std::size_t sum = 0;
        for (const auto& [s, n] : x.eliminated_by_severity) sum += n;
        CHECK(sum == x.eliminated_total);
    }
}

TEST_CASE("what-if agrees with the filter on random reports") {
    std::mt19937_64 rng(8675309);
    std::uniform_int_distribution<int> sev(0, 5), mem(0, 4), n(0, 40);
    for (int i = 0; i < 200; ++i) {
        VulnerabilityReport r;
        for (int k = 0, m = n(rng); k < m; ++k) {
            Finding f;
            f.severity = static_cast<Severity>(sev(rng));
            f.memory_class = static_cast<MemoryClass>(mem(rng));
            r.findings.push_back(f);
        }
        for (auto t : {Severity::Low, Severity::Medium, Severity::High, Severity::Critical}) {
            CHECK(whatif_memory_safe(r, t).eliminated_total == brute_whatif(r, t));
        }
    }
}

TEST_CASE("pareto order and zero buckets") {
    std::map<Severity, std::size_t> counts{{Severity::Low, 2}, {Severity::Critical, 1},
                                           {Severity::High, 0}, {Severity::Unknown, 3}};
    auto b = pareto(counts);
    REQUIRE(b.size() == 3);
    CHECK(b[0].label == "critical");
    CHECK(b[1].label == "low");
    CHECK(b[2].cumulative == 6);
}

TEST_CASE("json shapes") {
    auto db = feed("feed-min.json");
    RuleEngine rules;
    auto r = analyze_sbom(doc("busybox.sbom.json"), db, rules);
    auto j = to_json(r);
    REQUIRE(j["findings"].size() == 4);
    for (const char* k : {"component", "cve_id", "cwe_ids", "base_score", "severity", "memory_class", "nvd_url"}) {
        CHECK(j["findings"][0].contains(k));
    }
    auto p = history_payload(history("openssl", "openssl", db, rules), db);
    CHECK(p["history"]["rows"].size() == 5);
    CHECK(p["time_series"].size() == 3);
    CHECK(p["pareto"].is_array());
}

TEST_CASE("text rendering lines up") {
    auto t = render_table({"a", "long header"}, {{"xxxx", "y"}});
    std::istringstream in(t);
    std::string l1, l2, l3;
    std::getline(in, l1);
    std::getline(in, l2);
    std::getline(in, l3);
    CHECK(l1.find("long header") == l3.find("y"));
}
