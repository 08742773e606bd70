#pragma once

#include "unibom/sbom.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace unibom::scan {

using VendorProduct = std::pair<std::string, std::string>;

enum class CcppRuleKind { CMakeFindPackage, MakefileLinkFlag, ConanfileRequires, PkgConfigRequires,
                          WellKnownHeader };

std::string_view to_string(CcppRuleKind k);

/// Text with one `{version}` slot, e.g. `BusyBox v{version}`.
struct VersionStringPattern {
    VendorProduct product;
    std::string prefix;
    std::string suffix;

    struct Hit {
        std::string version;
        std::size_t offset;
    };
    /// All non-overlapping captures in `data`.
    std::vector<Hit> find_all(std::string_view data) const;
};

class RulesError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Token maps and version-string patterns loaded from the rules text format
/// (see data/scanner-rules.txt).
struct ScannerRules {
    std::map<CcppRuleKind, std::map<std::string, VendorProduct>> product_maps;
    std::vector<VersionStringPattern> version_strings;

    static ScannerRules parse(std::string_view text);
    static const ScannerRules& bundled();

    std::optional<VendorProduct> lookup(CcppRuleKind kind, std::string_view token) const;
};

enum class CataloguerId { OpkgControl, DpkgStatus, ApkInstalled, NodePackageManifest, ConanLock,
                          BinaryVersionString };

std::string_view to_string(CataloguerId id);

/// The first cataloguer, in table order, that claims `relative_path`.
/// `executable` reports whether the file is an ELF image or has an exec bit.
std::optional<CataloguerId> claim(const std::filesystem::path& relative_path, bool executable);

struct ScanOptions {
    std::uintmax_t binary_size_cap = 64ull << 20;
    const ScannerRules* rules = nullptr;  // bundled rules when null
};

struct ScanResult {
    sbom::SbomDocument document;
    std::vector<std::string> warnings;
};

/// Package metadata and binary version strings under `root`. Evidence paths
/// are relative to root. Throws IoError when root is not a readable directory.
ScanResult scan_filesystem(const std::filesystem::path& root, const ScanOptions& options = {});

/// Build files and headers of a C/C++ tree.
ScanResult scan_ccpp(const std::filesystem::path& root, const ScanOptions& options = {});

// Per-format parsers, exposed for tests. Each returns (name, version) pairs.
using NameVersion = std::pair<std::string, std::optional<std::string>>;
std::vector<NameVersion> parse_control_stanzas(std::string_view text, bool require_installed);
std::vector<NameVersion> parse_apk_installed(std::string_view text);
std::optional<NameVersion> parse_package_json(std::string_view text);
std::vector<NameVersion> parse_conan_lock(std::string_view text);

}  // namespace unibom::scan
