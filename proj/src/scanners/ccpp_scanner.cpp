#include "unibom/fsutil.hpp"
#include "unibom/scanners.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

namespace unibom::scan {

namespace fs = std::filesystem;

namespace {

struct Hit {
    CcppRuleKind kind;
    std::string token;
    std::optional<std::string> version;
    std::optional<std::string> constraint;  // "minimum" / "exact"
};

enum class FileKind { None, CMake, Makefile, ConanTxt, ConanPy, PkgConfig, Source };

FileKind classify_file(const fs::path& path) {
    auto name = path.filename().string();
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (name == "CMakeLists.txt" || ext == ".cmake") return FileKind::CMake;
    if (name.starts_with("Makefile") || name.starts_with("makefile") || name == "GNUmakefile" ||
        ext == ".mk") {
        return FileKind::Makefile;
    }
    if (name == "conanfile.txt") return FileKind::ConanTxt;
    if (name == "conanfile.py") return FileKind::ConanPy;
    if (ext == ".pc") return FileKind::PkgConfig;
    static const std::set<std::string> sources = {".c", ".h", ".cc", ".cpp", ".cxx", ".hpp",
                                                  ".hh", ".hxx", ".ino", ".ipp", ".inl"};
    if (sources.contains(ext)) return FileKind::Source;
    return FileKind::None;
}

std::string strip_hash_comments(std::string_view text) {
    std::string out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        // CMake bracket comments are rare in find_package lines; line comments suffice.
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        out += line;
        out += '\n';
    }
    return out;
}

std::vector<Hit> cmake_hits(std::string_view text) {
    static const std::regex find_package(
        R"(find_package\s*\(\s*([A-Za-z0-9_.+-]+)(?:\s+([0-9][0-9A-Za-z.]*))?(?:\s+(EXACT))?)",
        std::regex::icase);
    std::vector<Hit> hits;
    auto body = strip_hash_comments(text);
    for (std::sregex_iterator it(body.begin(), body.end(), find_package), end; it != end; ++it) {
        Hit h{CcppRuleKind::CMakeFindPackage, (*it)[1].str(), std::nullopt, std::nullopt};
        if ((*it)[2].matched) {
            h.version = (*it)[2].str();
            h.constraint = (*it)[3].matched ? "exact" : "minimum";
        }
        hits.push_back(std::move(h));
    }
    return hits;
}

std::vector<Hit> makefile_hits(std::string_view text) {
    static const std::regex link_flag(R"((?:^|[\s'"=(])-l([A-Za-z0-9_+][A-Za-z0-9_.+-]*))");
    std::vector<Hit> hits;
    auto body = strip_hash_comments(text);
    for (std::sregex_iterator it(body.begin(), body.end(), link_flag), end; it != end; ++it) {
        hits.push_back({CcppRuleKind::MakefileLinkFlag, (*it)[1].str(), std::nullopt, std::nullopt});
    }
    return hits;
}

std::optional<Hit> conan_ref_hit(std::string_view ref) {
    auto slash = ref.find('/');
    if (slash == std::string_view::npos || slash == 0) return std::nullopt;
    auto version = std::string(ref.substr(slash + 1, ref.find_first_of("@#% \t", slash + 1) - slash - 1));
    Hit h{CcppRuleKind::ConanfileRequires, std::string(ref.substr(0, slash)), std::nullopt, std::nullopt};
    // Version ranges like [>=1.2 <2] are not pins.
    if (!version.empty() && version.front() != '[') h.version = version;
    return h;
}

std::vector<Hit> conan_txt_hits(std::string_view text) {
    std::vector<Hit> hits;
    std::istringstream in{std::string(text)};
    std::string line;
    bool in_requires = false;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line.erase(0, line.find_first_not_of(" \t\r"));
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '[') {
            in_requires = line == "[requires]";
            continue;
        }
        if (!in_requires) continue;
        if (auto h = conan_ref_hit(line)) hits.push_back(std::move(*h));
    }
    return hits;
}

std::vector<Hit> conan_py_hits(std::string_view text) {
    static const std::regex ref(R"(["']([A-Za-z0-9_.+-]+/[^"'\s]+)["'])");
    std::vector<Hit> hits;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.find("requires") == std::string::npos) continue;
        if (line.find("build_requires") != std::string::npos || line.find("tool_requires") != std::string::npos) {
            continue;
        }
        for (std::sregex_iterator it(line.begin(), line.end(), ref), end; it != end; ++it) {
            if (auto h = conan_ref_hit((*it)[1].str())) hits.push_back(std::move(*h));
        }
    }
    return hits;
}

std::vector<Hit> pkgconfig_hits(std::string_view text) {
    static const std::regex module(R"(([A-Za-z0-9_.+-]+)(?:\s*(>=|=|<=|>|<)\s*([0-9][0-9A-Za-z.]*))?)");
    std::vector<Hit> hits;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        std::string_view rest;
        if (line.starts_with("Requires:")) rest = std::string_view(line).substr(9);
        else if (line.starts_with("Requires.private:")) rest = std::string_view(line).substr(17);
        else continue;
        std::string list(rest);
        std::replace(list.begin(), list.end(), ',', ' ');
        for (std::sregex_iterator it(list.begin(), list.end(), module), end; it != end; ++it) {
            Hit h{CcppRuleKind::PkgConfigRequires, (*it)[1].str(), std::nullopt, std::nullopt};
            auto op = (*it)[2].str();
            if (op == "=" || op == ">=") {
                h.version = (*it)[3].str();
                h.constraint = op == "=" ? "exact" : "minimum";
            }
            hits.push_back(std::move(h));
        }
    }
    return hits;
}

std::vector<Hit> header_hits(std::string_view text) {
    static const std::regex include(R"([ \t]*#[ \t]*include[ \t]*[<"]([^>"]+)[>"].*)");
    std::vector<Hit> hits;
    std::istringstream in{std::string(text)};
    std::string line;
    std::smatch m;
    while (std::getline(in, line)) {
        if (line.find("include") == std::string::npos) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (std::regex_match(line, m, include)) {
            hits.push_back({CcppRuleKind::WellKnownHeader, m[1].str(), std::nullopt, std::nullopt});
        }
    }
    return hits;
}

std::optional<VendorProduct> resolve(const ScannerRules& rules, const Hit& hit) {
    if (auto vp = rules.lookup(hit.kind, hit.token)) return vp;
    switch (hit.kind) {
        case CcppRuleKind::WellKnownHeader: {
            auto slash = hit.token.rfind('/');
            if (slash != std::string::npos) {
                return rules.lookup(hit.kind, std::string_view(hit.token).substr(slash + 1));
            }
            return std::nullopt;
        }
        case CcppRuleKind::ConanfileRequires:
        case CcppRuleKind::PkgConfigRequires: {
            std::string t = hit.token;
            for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            return VendorProduct{t, t};
        }
        default: return std::nullopt;
    }
}

}  // namespace

ScanResult scan_ccpp(const fs::path& root, const ScanOptions& options) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw IoError("not a readable directory: " + root.string());
    const auto& rules = options.rules ? *options.rules : ScannerRules::bundled();

    ScanResult result;
    sbom::SbomDocument doc;
    doc.target_name = root.filename().empty() ? root.parent_path().filename().string()
                                              : root.filename().string();
    doc.created_at = utc_now_rfc3339();
    doc.generator = "unibom";

    std::vector<fs::path> files;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw IoError("cannot walk " + root.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) {
            result.warnings.push_back("walk error: " + ec.message());
            ec.clear();
            continue;
        }
        if (it->is_directory(ec) && it->path().filename() == ".git") {
            it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file(ec) && !it->is_symlink(ec) && classify_file(it->path()) != FileKind::None) {
            files.push_back(it->path());
        }
    }
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
        auto rel = fs::relative(path, root, ec).generic_string();
        std::string text;
        try {
            text = read_file(path);
        } catch (const IoError& e) {
            result.warnings.push_back(std::string("skipped ") + rel + ": " + e.what());
            continue;
        }

        std::vector<Hit> hits;
        try {
            switch (classify_file(path)) {
                case FileKind::CMake: hits = cmake_hits(text); break;
                case FileKind::Makefile: hits = makefile_hits(text); break;
                case FileKind::ConanTxt: hits = conan_txt_hits(text); break;
                case FileKind::ConanPy: hits = conan_py_hits(text); break;
                case FileKind::PkgConfig: hits = pkgconfig_hits(text); break;
                case FileKind::Source: hits = header_hits(text); break;
                case FileKind::None: break;
            }
        } catch (const std::regex_error& e) {
            // libstdc++ regex can exhaust its stack on pathological input.
            result.warnings.push_back("skipped malformed " + rel + ": " + e.what());
            continue;
        }

        for (const auto& hit : hits) {
            auto vp = resolve(rules, hit);
            if (!vp) continue;
            std::vector<std::string> evidence{rel};
            if (hit.constraint) evidence.push_back("constraint:" + *hit.constraint);
            doc.components.push_back(sbom::make_component(vp->second, hit.version,
                                                          sbom::Source::CcppBuildFile,
                                                          std::move(evidence), *vp));
        }
    }

    std::vector<sbom::SbomDocument> docs{std::move(doc)};
    result.document = sbom::merge_sboms(docs);
    return result;
}

}  // namespace unibom::scan
