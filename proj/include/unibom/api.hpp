#pragma once

#include "unibom/analysis.hpp"
#include "unibom/classify.hpp"
#include "unibom/sbom.hpp"
#include "unibom/vulndb.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace unibom::api {

/// One directory per upload, named by the SHA-256 of the uploaded bytes,
/// holding sbom.json, report.json and meta.json. Entries are staged in a
/// temp directory and renamed into place.
class Store {
public:
    explicit Store(std::filesystem::path root);

    struct PutResult {
        std::string id;
        bool created;
    };

    /// Throws sbom::SbomError when the body is not an SBOM.
    PutResult put(std::string_view body, const vulndb::VulnDatabase& db, classify::ClassifierPort& port);

    bool contains(std::string_view id) const;
    /// nullopt for unknown or malformed ids.
    std::optional<sbom::SbomDocument> sbom(std::string_view id) const;
    std::optional<nlohmann::json> report(std::string_view id) const;

    const std::filesystem::path& root() const { return root_; }

    static bool valid_id(std::string_view id);

private:
    std::filesystem::path root_;
    mutable std::mutex write_mutex_;
};

/// Rebuilds the fields of a report that the what-if filter reads.
analysis::VulnerabilityReport report_from_json(const nlohmann::json& j);

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8642;  // 0 picks a free port
    std::filesystem::path store;
    std::optional<std::filesystem::path> ui_dir;
};

class ApiServer {
public:
    ApiServer(ServiceConfig config, std::shared_ptr<const vulndb::VulnDatabase> db,
              std::shared_ptr<classify::ClassifierPort> port);
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds the socket; returns the bound port. Throws std::runtime_error.
    int bind();
    /// Serves until stop(). Calls bind() first if needed.
    void listen();
    /// bind() and serve on a background thread.
    int start();
    void stop();

    int port() const { return bound_port_; }

    /// Swaps the database used by requests that arrive afterwards.
    void reload_feed(std::shared_ptr<const vulndb::VulnDatabase> db);

private:
    void install_routes();
    std::shared_ptr<const vulndb::VulnDatabase> db() const;

    ServiceConfig config_;
    Store store_;
    std::shared_ptr<const vulndb::VulnDatabase> db_;
    mutable std::mutex db_mutex_;
    std::shared_ptr<classify::ClassifierPort> port_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int bound_port_ = -1;
};

}  // namespace unibom::api
