#include "unibom/vulndb.hpp"

#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace unibom;
using namespace unibom::vulndb;

namespace {

int feed_error(std::string_view text) {
    try {
        parse_feed(text);
    } catch (const FeedError& e) {
        return static_cast<int>(e.code());
    }
    return -1;
}

const int kMalformed = static_cast<int>(FeedErrc::MalformedFeed);

std::string version(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> seg(1, 3), num(0, 4), sfx(0, 6);
    std::string v;
    for (int i = 0, n = seg(rng); i < n; ++i) {
        if (i) v += '.';
        v += std::to_string(num(rng));
        if (sfx(rng) == 6) v += 'b';
    }
    return v;
}

// Straight scan over every criterion, no index.
std::vector<std::string> brute_force(const std::vector<CveRecord>& recs, const cpe::CpeName& c,
                                     cpe::MatchOptions opt) {
    std::vector<std::string> ids;
    for (const auto& r : recs) {
        for (const auto& m : r.criteria) {
            if (cpe::match_cpe(c, m, opt)) {
                ids.push_back(r.cve_id);
                break;
            }
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace

TEST_CASE("fixture feed loads") {
    auto db = ingest_feed(testsupport::fixture_path("feed-min.json"));
    CHECK(db.size() == 9);
    const auto* r = db.find("CVE-2021-42376");
    REQUIRE(r);
    CHECK(r->cwe_ids == std::vector<std::string>{"CWE-476"});
    CHECK(r->base_severity == Severity::Medium);
    CHECK(r->published_year == 2021);
    CHECK(db.find("CVE-1999-0001") == nullptr);
}

TEST_CASE("null score is Unknown severity") {
    auto db = ingest_feed(testsupport::fixture_path("feed-compare.json"));
    const auto* r = db.find("CVE-2014-9114");
    REQUIRE(r);
    CHECK_FALSE(r->base_score.has_value());
    CHECK(r->base_severity == Severity::Unknown);
}

TEST_CASE("cve id syntax") {
    CHECK(is_valid_cve_id("CVE-2021-42376"));
    CHECK(is_valid_cve_id("CVE-2024-1234567"));
    CHECK_FALSE(is_valid_cve_id("CVE-2021-123"));
    CHECK_FALSE(is_valid_cve_id("cve-2021-42376"));
    CHECK_FALSE(is_valid_cve_id("CVE-21-42376"));
}

TEST_CASE("malformed feeds are rejected") {
    CHECK(feed_error("{") == kMalformed);
    CHECK(feed_error("{}") == kMalformed);
    CHECK(feed_error("[1]") == kMalformed);
    CHECK(feed_error(R"([{"description":"x"}])") == kMalformed);
    CHECK(feed_error(R"([{"cveId":"bogus"}])") == kMalformed);
    CHECK(feed_error(R"([{"cveId":"CVE-2020-0001","baseScore":11}])") == kMalformed);
    CHECK(feed_error(R"([{"cveId":"CVE-2020-0001","baseScore":"high"}])") == kMalformed);
    CHECK(feed_error(R"([{"cveId":"CVE-2020-0001","baseSeverity":"extreme"}])") == kMalformed);
    CHECK(feed_error(R"([{"cveId":"CVE-2020-0001","criteria":[{"cpe23":"cpe:/a:x"}]}])") == kMalformed);
    CHECK(feed_error(R"([{"cveId":"CVE-2020-0001","criteria":[{"cpe23":"cpe:2.3:a:x:y:*:*:*:*:*:*:*:*",
        "versionEndIncluding":"1","versionEndExcluding":"2"}]}])") == kMalformed);
    CHECK(feed_error(R"([{"cveId":"CVE-2020-0001","criteria":[{"cpe23":"cpe:2.3:a:x:y:1.0:*:*:*:*:*:*:*",
        "versionEndIncluding":"1"}]}])") == kMalformed);
    CHECK(feed_error(R"([{"cveId":"CVE-2020-0001"},{"cveId":"CVE-2020-0001"}])") ==
          static_cast<int>(FeedErrc::DuplicateCveId));
    CHECK(feed_error("[]") == -1);
}

TEST_CASE("wildcard vendor criteria live in the wildcard index") {
    auto db = parse_feed(R"([{"cveId":"CVE-2020-0001","criteria":[{"cpe23":"cpe:2.3:a:*:zlib:*:*:*:*:*:*:*:*"}]},
        {"cveId":"CVE-2020-0002","criteria":[{"cpe23":"cpe:2.3:a:zlib:zlib:1.2.11:*:*:*:*:*:*:*"}]}])");
    CHECK(db.wildcard_index().size() == 1);
    CHECK(db.product_index().size() == 1);
    auto hits = db.find_cves(cpe::CpeName::make('a', "zlib", "zlib", "1.2.11"));
    REQUIRE(hits.size() == 2);
    CHECK(hits[0]->cve_id == "CVE-2020-0001");
}

TEST_CASE("list_versions is ascending and distinct") {
    auto db = ingest_feed(testsupport::fixture_path("feed-min.json"));
    auto vs = db.list_versions("openssl", "openssl");
    REQUIRE_FALSE(vs.empty());
    for (std::size_t i = 1; i < vs.size(); ++i) CHECK(cpe::compare_versions(vs[i - 1], vs[i]) < 0);
    CHECK(db.list_versions("nobody", "nothing").empty());
}

TEST_CASE("index-backed find_cves equals a brute-force scan") {
    std::mt19937_64 rng(1000003);
    const char* vendors[] = {"busybox", "openssl", "zlib"};
    const char* products[] = {"busybox", "openssl", "zlib", "libz"};
    std::uniform_int_distribution<int> v3(0, 2), p4(0, 3), nrec(1, 12), ncrit(1, 3), kind(0, 5), coin(0, 1);
    std::size_t cases = 0, nonempty = 0;
    for (int feed = 0; feed < 100; ++feed) {
        std::vector<CveRecord> recs;
        for (int i = 0, n = nrec(rng); i < n; ++i) {
            CveRecord r;
            r.cve_id = "CVE-2020-" + std::to_string(10000 + i);
            for (int k = 0, m = ncrit(rng); k < m; ++k) {
                cpe::MatchCriterion c;
                c.pattern = cpe::CpeName::make('a', vendors[v3(rng)], products[p4(rng)], "");
                const int kd = kind(rng);
                if (kd == 0) c.pattern.vendor = cpe::AttributeValue::any();
                if (kd == 1) c.pattern.version = cpe::AttributeValue::literal(version(rng));
                if (kd >= 2 && coin(rng)) c.version_start = cpe::VersionBound{version(rng), coin(rng) == 1};
                if (kd >= 3) c.version_end = cpe::VersionBound{version(rng), coin(rng) == 1};
                r.criteria.push_back(std::move(c));
            }
            recs.push_back(std::move(r));
        }
        VulnDatabase db(recs);
        for (int q = 0; q < 12; ++q) {
            // Probe with bound versions too, so endpoints get exercised.
            std::string ver = version(rng);
            if (coin(rng)) {
                const auto& c = recs[static_cast<std::size_t>(q) % recs.size()].criteria.front();
                if (c.version_end) ver = c.version_end->version;
                else if (c.version_start) ver = c.version_start->version;
            }
            auto cand = cpe::CpeName::make('a', vendors[v3(rng)], products[p4(rng)], kind(rng) == 0 ? "" : ver);
            for (bool unversioned : {false, true}) {
                std::vector<std::string> got;
                for (const auto* r : db.find_cves(cand, {unversioned})) got.push_back(r->cve_id);
                INFO(cpe::format_cpe(cand));
                CHECK(got == brute_force(recs, cand, {unversioned}));
                ++cases;
                nonempty += !got.empty();
            }
        }
    }
    CHECK(cases >= 1000);
    CHECK(nonempty > cases / 10);
}
