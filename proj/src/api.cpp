#include "unibom/api.hpp"

#include "unibom/fsutil.hpp"

#include <httplib.h>

#include <random>

namespace unibom::api {

namespace fs = std::filesystem;
using nlohmann::json;

Store::Store(fs::path root) : root_(std::move(root)) {}

bool Store::valid_id(std::string_view id) {
    if (id.size() != 64) return false;
    for (char c : id) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return true;
}

bool Store::contains(std::string_view id) const {
    std::error_code ec;
    return valid_id(id) && fs::is_regular_file(root_ / std::string(id) / "report.json", ec);
}

Store::PutResult Store::put(std::string_view body, const vulndb::VulnDatabase& db,
                            classify::ClassifierPort& port) {
    const auto id = sha256_hex(body);
    if (contains(id)) return {id, false};

    auto doc = sbom::parse_sbom(body);
    auto report = analysis::analyze_sbom(doc, db, port);

    std::lock_guard lock(write_mutex_);
    if (contains(id)) return {id, false};
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw IoError("cannot create store " + root_.string() + ": " + ec.message());

    std::mt19937_64 rng(std::random_device{}());
    const auto staging = root_ / (".staging-" + id.substr(0, 16) + "-" + std::to_string(rng()));
    fs::create_directories(staging, ec);
    if (ec) throw IoError("cannot stage upload: " + ec.message());
    try {
        write_file_atomic(staging / "sbom.json", sbom::serialize_sbom(doc));
        write_file_atomic(staging / "report.json", analysis::to_json(report).dump(2) + "\n");
        json meta = {{"id", id}, {"created_at", utc_now_rfc3339()}, {"target_name", doc.target_name}};
        write_file_atomic(staging / "meta.json", meta.dump(2) + "\n");
        fs::rename(staging, root_ / id);
    } catch (...) {
        fs::remove_all(staging, ec);
        throw;
    }
    return {id, true};
}

std::optional<sbom::SbomDocument> Store::sbom(std::string_view id) const {
    if (!contains(id)) return std::nullopt;
    return sbom::load_sbom(root_ / std::string(id) / "sbom.json");
}

std::optional<json> Store::report(std::string_view id) const {
    if (!contains(id)) return std::nullopt;
    return json::parse(read_file(root_ / std::string(id) / "report.json"));
}

analysis::VulnerabilityReport report_from_json(const json& j) {
    analysis::VulnerabilityReport r;
    r.sbom_ref = j.value("sbom_ref", "");
    for (const auto& f : j.at("findings")) {
        analysis::Finding finding;
        finding.cve_id = f.at("cve_id").get<std::string>();
        finding.severity = vulndb::severity_from_string(f.at("severity").get<std::string>())
                               .value_or(vulndb::Severity::Unknown);
        finding.memory_class = classify::memory_class_from_string(f.at("memory_class").get<std::string>())
                                   .value_or(classify::MemoryClass::Unknown);
        if (f.contains("base_score") && f["base_score"].is_number()) {
            finding.base_score = f["base_score"].get<double>();
        }
        r.findings.push_back(std::move(finding));
    }
    return r;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
}

}  // namespace

ApiServer::ApiServer(ServiceConfig config, std::shared_ptr<const vulndb::VulnDatabase> db,
                     std::shared_ptr<classify::ClassifierPort> port)
    : config_(std::move(config)),
      store_(config_.store),
      db_(std::move(db)),
      port_(std::move(port)),
      server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

ApiServer::~ApiServer() { stop(); }

std::shared_ptr<const vulndb::VulnDatabase> ApiServer::db() const {
    std::lock_guard lock(db_mutex_);
    return db_;
}

void ApiServer::reload_feed(std::shared_ptr<const vulndb::VulnDatabase> db) {
    std::lock_guard lock(db_mutex_);
    db_ = std::move(db);
}

void ApiServer::install_routes() {
    auto& s = *server_;
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    s.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}, {"feed_records", db()->size()}});
    });

    s.Post("/api/sboms", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            auto db = this->db();
            auto put = store_.put(req.body, *db, *port_);
            send_json(res, put.created ? 201 : 200, {{"id", put.id}});
        } catch (const sbom::SbomError& e) {
            send_error(res, 400, e.what());
        }
    });

    s.Get(R"(/api/sboms/([^/]+)/analysis)", [this](const httplib::Request& req, httplib::Response& res) {
        auto report = store_.report(req.matches[1].str());
        if (!report) return send_error(res, 404, "unknown id");
        send_json(res, 200, *report);
    });

    s.Get(R"(/api/sboms/([^/]+)/whatif)", [this](const httplib::Request& req, httplib::Response& res) {
        auto report = store_.report(req.matches[1].str());
        if (!report) return send_error(res, 404, "unknown id");
        auto threshold = vulndb::Severity::Medium;
        if (req.has_param("threshold")) {
            auto parsed = vulndb::severity_from_string(req.get_param_value("threshold"));
            if (!parsed || *parsed == vulndb::Severity::Unknown) {
                return send_error(res, 400, "bad threshold");
            }
            threshold = *parsed;
        }
        send_json(res, 200, analysis::to_json(analysis::whatif_memory_safe(report_from_json(*report), threshold)));
    });

    s.Get("/api/history", [this](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("cpe")) return send_error(res, 400, "missing cpe parameter");
        cpe::CpeName name;
        try {
            name = cpe::parse_cpe(req.get_param_value("cpe"));
        } catch (const cpe::CpeError& e) {
            return send_error(res, 400, e.what());
        }
        if (!name.vendor.is_literal() || !name.product.is_literal()) {
            return send_error(res, 400, "cpe needs a literal vendor and product");
        }
        auto db = this->db();
        auto h = analysis::history(name.vendor.text(), name.product.text(), *db, *port_, name.part.text().front());
        send_json(res, 200, analysis::history_payload(h, *db));
    });

    s.Post("/api/compare", [this](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("id_a") || !body.contains("id_b") ||
            !body["id_a"].is_string() || !body["id_b"].is_string()) {
            return send_error(res, 400, "expected {\"id_a\": ..., \"id_b\": ...}");
        }
        auto a = store_.sbom(body["id_a"].get<std::string>());
        auto b = store_.sbom(body["id_b"].get<std::string>());
        if (!a || !b) return send_error(res, 404, "unknown id");
        auto db = this->db();
        send_json(res, 200, analysis::to_json(analysis::compare(*a, *b, *db, *port_)));
    });

    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        } catch (...) {
            send_error(res, 500, "internal error");
        }
    });

    if (config_.ui_dir) {
        if (!s.set_mount_point("/", config_.ui_dir->string())) {
            throw std::runtime_error("ui directory not found: " + config_.ui_dir->string());
        }
    }
}

int ApiServer::bind() {
    if (bound_port_ >= 0) return bound_port_;
    if (config_.port == 0) {
        bound_port_ = server_->bind_to_any_port(config_.host);
    } else if (server_->bind_to_port(config_.host, config_.port)) {
        bound_port_ = config_.port;
    }
    if (bound_port_ < 0) {
        throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    }
    return bound_port_;
}

void ApiServer::listen() {
    bind();
    server_->listen_after_bind();
}

int ApiServer::start() {
    bind();
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound_port_;
}

void ApiServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace unibom::api
