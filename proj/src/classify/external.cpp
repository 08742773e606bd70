#include "unibom/bundled.hpp"
#include "unibom/classify.hpp"
#include "unibom/fsutil.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <regex>

namespace unibom::classify {

using nlohmann::json;

namespace {

struct ParsedUrl {
    std::string host;
    int port = 80;
    std::string path = "/";
};

std::optional<ParsedUrl> parse_http_url(std::string_view url) {
    constexpr std::string_view scheme = "http://";
    if (!url.starts_with(scheme)) return std::nullopt;
    url.remove_prefix(scheme.size());
    ParsedUrl out;
    auto slash = url.find('/');
    auto authority = url.substr(0, slash);
    if (slash != std::string_view::npos) out.path = std::string(url.substr(slash));
    if (auto colon = authority.rfind(':'); colon != std::string_view::npos) {
        try {
            out.port = std::stoi(std::string(authority.substr(colon + 1)));
        } catch (const std::exception&) {
            return std::nullopt;
        }
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) return std::nullopt;
    out.host = std::string(authority);
    return out;
}

std::optional<MemoryClass> parse_completion(std::string text) {
    for (auto& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (auto& c : text) {
        if (c == '_' || c == ' ') c = '-';
    }
    // Most specific labels first: "not-memory" contains no other label, but
    // "other-memory" must be tested before a bare "memory" mention.
    for (auto cls : {MemoryClass::NotMemory, MemoryClass::OtherMemory, MemoryClass::Temporal,
                     MemoryClass::Spatial}) {
        if (text.find(to_string(cls)) != std::string::npos) return cls;
    }
    return std::nullopt;
}

}  // namespace

ExternalModelClient::ExternalModelClient(Config config, const CweRuleTable& table)
    : config_(std::move(config)),
      rules_(table),
      table_(&table),
      pending_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_pending))) {
    if (config_.cache_file.empty()) return;
    std::error_code ec;
    if (!std::filesystem::exists(config_.cache_file, ec)) return;
    try {
        auto j = json::parse(read_file(config_.cache_file));
        for (const auto& [key, value] : j.items()) {
            if (!value.is_string()) continue;
            if (auto mc = memory_class_from_string(value.get<std::string>())) cache_[key] = *mc;
        }
    } catch (const std::exception&) {
        // A corrupt cache is discarded and rebuilt.
        cache_.clear();
    }
}

std::optional<ExternalModelClient::Config> ExternalModelClient::config_from_env(
    const std::filesystem::path& cache_file) {
    const char* url = std::getenv("UNIBOM_CLASSIFIER_URL");
    if (!url || !*url) return std::nullopt;
    Config c;
    c.url = url;
    if (const char* key = std::getenv("UNIBOM_CLASSIFIER_KEY")) c.api_key = key;
    c.cache_file = cache_file;
    return c;
}

std::string ExternalModelClient::render_prompt(std::string_view identifier,
                                               std::string_view description) {
    std::string prompt(bundled::classifier_prompt());
    auto replace = [&](std::string_view slot, std::string_view value) {
        for (auto pos = prompt.find(slot); pos != std::string::npos;
             pos = prompt.find(slot, pos + value.size())) {
            prompt.replace(pos, slot.size(), value);
        }
    };
    replace("{identifier}", identifier);
    replace("{description}", description.empty() ? std::string_view("(none)") : description);
    return prompt;
}

std::string ExternalModelClient::cache_key(std::string_view identifier,
                                           std::string_view description) const {
    static const std::regex numbered(R"(CWE-\d+)");
    if (std::regex_match(identifier.begin(), identifier.end(), numbered)) {
        return std::string(identifier);
    }
    // noinfo/Other ids say nothing on their own; key by the text as well.
    return std::string(identifier) + ":" + sha256_hex(description).substr(0, 16);
}

void ExternalModelClient::persist_cache_locked() {
    if (config_.cache_file.empty()) return;
    json j = json::object();
    for (const auto& [key, value] : cache_) j[key] = to_string(value);
    try {
        write_file_atomic(config_.cache_file, j.dump(2) + "\n");
    } catch (const IoError&) {
        // Cache persistence is best effort.
    }
}

MemoryClass ExternalModelClient::request(std::string_view identifier,
                                         std::string_view description) {
    auto url = parse_http_url(config_.url);
    if (!url) {
        throw ClassifyError(ClassifyErrc::ExternalClassifierUnavailable,
                            "unsupported classifier URL (http:// only): " + config_.url);
    }
    if (!pending_.try_acquire_for(config_.timeout)) {
        throw ClassifyError(ClassifyErrc::ExternalClassifierUnavailable, "classifier queue is full");
    }
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{pending_};

    std::lock_guard lock(request_mutex_);
    httplib::Client client(url->host, url->port);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    json body = {{"identifier", identifier}, {"prompt", render_prompt(identifier, description)}};
    auto res = client.Post(url->path, headers, body.dump(), "application/json");
    if (!res) {
        throw ClassifyError(ClassifyErrc::ExternalClassifierUnavailable,
                            "classifier request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw ClassifyError(ClassifyErrc::ExternalClassifierUnavailable,
                            "classifier returned HTTP " + std::to_string(res->status));
    }
    std::string completion = res->body;
    if (auto j = json::parse(res->body, nullptr, false); j.is_object() && j.contains("completion") &&
                                                          j["completion"].is_string()) {
        completion = j["completion"].get<std::string>();
    }
    auto mc = parse_completion(completion);
    if (!mc) {
        throw ClassifyError(ClassifyErrc::ExternalClassifierUnavailable,
                            "unrecognised classifier answer: " + completion.substr(0, 80));
    }
    return *mc;
}

Classification ExternalModelClient::classify(std::string_view identifier,
                                             std::optional<std::string_view> description) {
    if (auto hit = table_->lookup(identifier)) return {*hit, Provenance::RuleTable, {}};

    std::string_view text = description.value_or(std::string_view{});
    auto key = cache_key(identifier, text);
    {
        std::lock_guard lock(cache_mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            return {it->second, Provenance::Cache, {}};
        }
    }
    try {
        auto mc = request(identifier, text);
        std::lock_guard lock(cache_mutex_);
        cache_[key] = mc;
        persist_cache_locked();
        return {mc, Provenance::ExternalModel, {}};
    } catch (const ClassifyError& e) {
        auto fallback = rules_.classify(identifier, description);
        fallback.provenance = Provenance::Fallback;
        fallback.note = e.what();
        return fallback;
    }
}

}  // namespace unibom::classify
