#pragma once

#include "unibom/cpe.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace unibom::sbom {

/// Which scanner produced a component. Declaration order is confidence order,
/// highest first.
enum class Source { FilesystemCatalog, BinaryString, CcppBuildFile, ExternalSbom };

std::string_view to_string(Source s);
std::optional<Source> source_from_string(std::string_view s);

struct Component {
    std::string name;                    // lowercase
    std::optional<std::string> version;  // nullopt == Unknown
    std::optional<cpe::CpeName> cpe;
    Source source = Source::ExternalSbom;
    std::vector<std::string> evidence;
    nlohmann::json extra = nlohmann::json::object();  // unrecognised keys from load; not emitted

    /// The CPE used for matching: the explicit one, or {a, name, name, version}.
    cpe::CpeName effective_cpe() const;
    std::string version_or_unknown() const { return version.value_or("unknown"); }

    bool operator==(const Component& o) const {
        return name == o.name && version == o.version && cpe == o.cpe && source == o.source &&
               evidence == o.evidence;
    }
};

/// Builds a component with a synthesized CPE. Name is lowercased.
Component make_component(std::string_view name, std::optional<std::string> version,
                         Source source, std::vector<std::string> evidence = {},
                         std::optional<std::pair<std::string, std::string>> vendor_product = {});

struct SbomDocument {
    std::string target_name;
    std::string created_at;  // RFC 3339, UTC
    std::string generator = "unibom";
    std::vector<Component> components;

    bool operator==(const SbomDocument&) const = default;
};

enum class SbomErrc { MalformedDocument, MissingComponentName };

class SbomError : public std::runtime_error {
public:
    SbomError(SbomErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    SbomErrc code() const noexcept { return code_; }

private:
    SbomErrc code_;
};

SbomDocument parse_sbom(std::string_view text);
SbomDocument load_sbom(const std::filesystem::path& file);

std::string serialize_sbom(const SbomDocument& doc);
void emit_sbom(const SbomDocument& doc, const std::filesystem::path& file);

/// Union by (name, version). Evidence is concatenated without duplicates and
/// the highest-confidence source wins. Output sorted by (name, version).
SbomDocument merge_sboms(std::span<const SbomDocument> docs);

/// Unknown sorts before any concrete version; otherwise compare_versions.
bool component_less(const Component& a, const Component& b);

}  // namespace unibom::sbom
