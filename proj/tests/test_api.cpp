#include "unibom/api.hpp"
#include "unibom/cli.hpp"

#include "support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <sstream>

using namespace unibom;
using nlohmann::json;
using testsupport::fixture;
using testsupport::fixture_path;
using testsupport::TempDir;

namespace {

struct Service {
    TempDir store;
    std::unique_ptr<api::ApiServer> server;
    std::unique_ptr<httplib::Client> client;

    explicit Service(const char* feed = "feed-min.json") {
        api::ServiceConfig cfg;
        cfg.port = 0;
        cfg.store = store.path();
        auto db = std::make_shared<const vulndb::VulnDatabase>(vulndb::ingest_feed(fixture_path(feed)));
        server = std::make_unique<api::ApiServer>(cfg, db, std::make_shared<classify::RuleEngine>());
        int port = server->start();
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
    }
    ~Service() { server->stop(); }

    std::string upload(const std::string& body, int expect) {
        auto r = client->Post("/api/sboms", body, "application/json");
        REQUIRE(r);
        CHECK(r->status == expect);
        return json::parse(r->body)["id"].get<std::string>();
    }
};

}  // namespace

TEST_CASE("health") {
    Service s;
    auto r = s.client->Get("/api/health");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
    auto j = json::parse(r->body);
    CHECK(j["status"] == "ok");
    CHECK(j["feed_records"] == 9);
}

TEST_CASE("upload is content addressed and idempotent") {
    Service s;
    auto body = fixture("busybox.sbom.json");
    auto id = s.upload(body, 201);
    CHECK(api::Store::valid_id(id));
    CHECK(s.upload(body, 200) == id);
    auto r = s.client->Get("/api/sboms/" + id + "/analysis");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(json::parse(r->body)["findings"].size() == 4);
    CHECK(std::filesystem::exists(s.store / id / "sbom.json"));
    CHECK(std::filesystem::exists(s.store / id / "report.json"));
    CHECK(std::filesystem::exists(s.store / id / "meta.json"));
}

TEST_CASE("error statuses") {
    Service s;
    auto bad = s.client->Post("/api/sboms", "not json", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body).contains("error"));
    const std::string unknown(64, 'a');
    CHECK(s.client->Get("/api/sboms/" + unknown + "/analysis")->status == 404);
    CHECK(s.client->Get("/api/sboms/..%2F..%2Fetc/analysis")->status == 404);
    CHECK(s.client->Get("/api/history")->status == 400);
    CHECK(s.client->Get("/api/history?cpe=garbage")->status == 400);
    CHECK(s.client->Get("/api/history?cpe=cpe:2.3:a:*:openssl:*:*:*:*:*:*:*:*")->status == 400);
    auto id = s.upload(fixture("busybox.sbom.json"), 201);
    CHECK(s.client->Get("/api/sboms/" + id + "/whatif?threshold=unknown")->status == 400);
    CHECK(s.client->Get("/api/sboms/" + id + "/whatif?threshold=huge")->status == 400);
    CHECK(s.client->Post("/api/compare", "{}", "application/json")->status == 400);
    CHECK(s.client->Post("/api/compare", json{{"id_a", id}, {"id_b", unknown}}.dump(), "application/json")->status ==
          404);
    auto opt = s.client->Options("/api/sboms");
    REQUIRE(opt);
    CHECK(opt->status == 204);
}

TEST_CASE("whatif over the api") {
    Service s("feed-whatif.json");
    auto id = s.upload(fixture("whatif.sbom.json"), 201);
    auto r = s.client->Get("/api/sboms/" + id + "/whatif");
    REQUIRE(r);
    CHECK(json::parse(r->body)["eliminated_total"] == 42);
    auto c = s.client->Get("/api/sboms/" + id + "/whatif?threshold=critical");
    CHECK(json::parse(c->body)["eliminated_total"] == 12);
}

TEST_CASE("store survives a server restart") {
    TempDir store;
    auto db = std::make_shared<const vulndb::VulnDatabase>(vulndb::ingest_feed(fixture_path("feed-min.json")));
    std::string id;
    {
        api::Store st(store.path());
        classify::RuleEngine rules;
        id = st.put(fixture("busybox.sbom.json"), *db, rules).id;
    }
    api::Store again(store.path());
    CHECK(again.contains(id));
    CHECK(again.sbom(id)->target_name == "busybox-demo");
    CHECK_FALSE(again.sbom("../x").has_value());
}
