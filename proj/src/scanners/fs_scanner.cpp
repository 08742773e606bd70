#include "unibom/fsutil.hpp"
#include "unibom/scanners.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace unibom::scan {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(CataloguerId id) {
    switch (id) {
        case CataloguerId::OpkgControl: return "opkg-control";
        case CataloguerId::DpkgStatus: return "dpkg-status";
        case CataloguerId::ApkInstalled: return "apk-installed";
        case CataloguerId::NodePackageManifest: return "node-package-manifest";
        case CataloguerId::ConanLock: return "conan-lock";
        case CataloguerId::BinaryVersionString: return "binary-version-string";
    }
    return "";
}

namespace {

bool ends_with_path(const std::string& path, std::string_view suffix) {
    if (path == suffix.substr(1)) return true;  // suffix carries a leading '/'
    return path.size() >= suffix.size() && path.ends_with(suffix);
}

bool contains_dir(const std::string& path, std::string_view dir) {
    return path.starts_with(dir.substr(1)) || path.find(dir) != std::string::npos;
}

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

bool looks_executable(const fs::path& path, const fs::file_status& status) {
    using fs::perms;
    auto p = status.permissions();
    if ((p & (perms::owner_exec | perms::group_exec | perms::others_exec)) != perms::none) return true;
    std::ifstream in(path, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    return in.gcount() == 4 && magic[0] == 0x7f && magic[1] == 'E' && magic[2] == 'L' && magic[3] == 'F';
}

std::optional<NameVersion> parse_ref(std::string_view ref) {
    // name/version[@user/channel][#revision][%timestamp]
    auto slash = ref.find('/');
    if (slash == std::string_view::npos || slash == 0) return std::nullopt;
    auto name = ref.substr(0, slash);
    auto rest = ref.substr(slash + 1);
    auto end = rest.find_first_of("@#%");
    auto version = trim(rest.substr(0, end));
    if (version.empty()) return NameVersion{std::string(name), std::nullopt};
    return NameVersion{std::string(name), version};
}

}  // namespace

std::optional<CataloguerId> claim(const fs::path& relative_path, bool executable) {
    const auto p = relative_path.generic_string();
    const auto file = relative_path.filename().string();
    if ((contains_dir(p, "/opkg/info/") && file.ends_with(".control")) ||
        ends_with_path(p, "/opkg/status")) {
        return CataloguerId::OpkgControl;
    }
    if (ends_with_path(p, "/var/lib/dpkg/status") || contains_dir(p, "/var/lib/dpkg/status.d/")) {
        return CataloguerId::DpkgStatus;
    }
    if (ends_with_path(p, "/lib/apk/db/installed")) return CataloguerId::ApkInstalled;
    if (file == "package.json") return CataloguerId::NodePackageManifest;
    if (file == "conan.lock") return CataloguerId::ConanLock;
    if (executable) return CataloguerId::BinaryVersionString;
    return std::nullopt;
}

std::vector<NameVersion> parse_control_stanzas(std::string_view text, bool require_installed) {
    std::vector<NameVersion> out;
    std::map<std::string, std::string> fields;
    auto flush = [&] {
        auto pkg = fields.find("package");
        if (pkg != fields.end() && !pkg->second.empty()) {
            bool installed = true;
            if (auto st = fields.find("status"); require_installed && st != fields.end()) {
                auto s = st->second;
                installed = s.size() >= 9 && s.ends_with("installed") &&
                            (s.size() == 9 || s[s.size() - 10] == ' ');
            }
            if (installed) {
                std::optional<std::string> version;
                if (auto v = fields.find("version"); v != fields.end() && !v->second.empty()) {
                    version = v->second;
                }
                out.emplace_back(pkg->second, version);
            }
        }
        fields.clear();
    };
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) {
            flush();
            continue;
        }
        if (line.front() == ' ' || line.front() == '\t') continue;  // continuation
        auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string key = line.substr(0, colon);
        for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        fields[key] = trim(std::string_view(line).substr(colon + 1));
    }
    flush();
    return out;
}

std::vector<NameVersion> parse_apk_installed(std::string_view text) {
    std::vector<NameVersion> out;
    std::string name, version;
    auto flush = [&] {
        if (!name.empty()) {
            out.emplace_back(name, version.empty() ? std::nullopt : std::optional(version));
        }
        name.clear();
        version.clear();
    };
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        if (line.size() >= 2 && line[1] == ':') {
            if (line[0] == 'P') name = trim(std::string_view(line).substr(2));
            if (line[0] == 'V') version = trim(std::string_view(line).substr(2));
        }
    }
    flush();
    return out;
}

std::optional<NameVersion> parse_package_json(std::string_view text) {
    auto j = json::parse(text, nullptr, false);
    if (!j.is_object()) return std::nullopt;
    auto name = j.find("name");
    if (name == j.end() || !name->is_string() || name->get<std::string>().empty()) return std::nullopt;
    std::optional<std::string> version;
    if (auto v = j.find("version"); v != j.end() && v->is_string() && !v->get<std::string>().empty()) {
        version = v->get<std::string>();
    }
    return NameVersion{name->get<std::string>(), version};
}

std::vector<NameVersion> parse_conan_lock(std::string_view text) {
    auto j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw std::runtime_error("conan.lock is not a JSON object");
    std::vector<NameVersion> out;
    auto add = [&](const json& ref) {
        if (!ref.is_string()) return;
        if (auto nv = parse_ref(ref.get<std::string>())) out.push_back(*nv);
    };
    // Conan 2 / lockfile 0.5: flat reference lists.
    for (const char* key : {"requires", "build_requires", "python_requires"}) {
        if (auto it = j.find(key); it != j.end() && it->is_array()) {
            for (const auto& ref : *it) add(ref);
        }
    }
    // Conan 1 / lockfile 0.4: graph_lock.nodes.<id>.ref
    if (auto gl = j.find("graph_lock"); gl != j.end() && gl->is_object()) {
        if (auto nodes = gl->find("nodes"); nodes != gl->end() && nodes->is_object()) {
            for (const auto& [id, node] : nodes->items()) {
                if (node.is_object() && node.contains("ref")) add(node["ref"]);
            }
        }
    }
    return out;
}

ScanResult scan_filesystem(const fs::path& root, const ScanOptions& options) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw IoError("not a readable directory: " + root.string());
    const auto& rules = options.rules ? *options.rules : ScannerRules::bundled();

    ScanResult result;
    sbom::SbomDocument catalogued, binaries;
    for (auto* d : {&catalogued, &binaries}) {
        d->target_name = root.filename().empty() ? root.parent_path().filename().string()
                                                 : root.filename().string();
        d->created_at = utc_now_rfc3339();
        d->generator = "unibom";
    }

    std::vector<fs::path> files;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw IoError("cannot walk " + root.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) {
            result.warnings.push_back("walk error: " + ec.message());
            ec.clear();
            continue;
        }
        if (it->is_regular_file(ec) && !it->is_symlink(ec)) files.push_back(it->path());
    }
    std::sort(files.begin(), files.end());

    auto add = [](sbom::SbomDocument& doc, const NameVersion& nv, sbom::Source source,
                  const std::string& evidence, std::optional<VendorProduct> vp = {}) {
        doc.components.push_back(sbom::make_component(nv.first, nv.second, source, {evidence}, vp));
    };

    for (const auto& path : files) {
        auto rel = fs::relative(path, root, ec).generic_string();
        auto status = fs::status(path, ec);
        auto size = fs::file_size(path, ec);
        if (ec) {
            result.warnings.push_back("skipped unreadable file " + rel);
            ec.clear();
            continue;
        }
        auto who = claim(fs::path(rel), looks_executable(path, status));
        if (!who) continue;
        if (*who == CataloguerId::BinaryVersionString && size > options.binary_size_cap) continue;

        std::string data;
        try {
            data = read_file(path);
        } catch (const IoError& e) {
            result.warnings.push_back(std::string("skipped ") + rel + ": " + e.what());
            continue;
        }

        try {
            switch (*who) {
                case CataloguerId::OpkgControl:
                case CataloguerId::DpkgStatus:
                    for (const auto& nv : parse_control_stanzas(data, true)) {
                        add(catalogued, nv, sbom::Source::FilesystemCatalog, rel);
                    }
                    break;
                case CataloguerId::ApkInstalled:
                    for (const auto& nv : parse_apk_installed(data)) {
                        add(catalogued, nv, sbom::Source::FilesystemCatalog, rel);
                    }
                    break;
                case CataloguerId::NodePackageManifest:
                    if (auto nv = parse_package_json(data)) {
                        add(catalogued, *nv, sbom::Source::FilesystemCatalog, rel);
                    }
                    break;
                case CataloguerId::ConanLock:
                    for (const auto& nv : parse_conan_lock(data)) {
                        add(catalogued, nv, sbom::Source::FilesystemCatalog, rel);
                    }
                    break;
                case CataloguerId::BinaryVersionString:
                    for (const auto& pattern : rules.version_strings) {
                        for (const auto& hit : pattern.find_all(data)) {
                            add(binaries, {pattern.product.second, hit.version},
                                sbom::Source::BinaryString, rel, pattern.product);
                        }
                    }
                    break;
            }
        } catch (const std::exception& e) {
            result.warnings.push_back("skipped malformed " + rel + ": " + e.what());
        }
    }

    std::vector<sbom::SbomDocument> docs{std::move(catalogued), std::move(binaries)};
    result.document = sbom::merge_sboms(docs);
    return result;
}

}  // namespace unibom::scan
