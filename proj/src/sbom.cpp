#include "unibom/sbom.hpp"

#include "unibom/fsutil.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace unibom::sbom {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kSourceProperty = "unibom:source";
constexpr std::string_view kEvidenceProperty = "unibom:evidence";
constexpr std::string_view kEpoch = "1970-01-01T00:00:00Z";

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

void append_unique(std::vector<std::string>& into, const std::vector<std::string>& from) {
    for (const auto& e : from) {
        if (std::find(into.begin(), into.end(), e) == into.end()) into.push_back(e);
    }
}

Component parse_component(const json& j) {
    if (!j.is_object()) throw SbomError(SbomErrc::MalformedDocument, "component is not an object");
    auto name_it = j.find("name");
    if (name_it == j.end() || !name_it->is_string() || name_it->get<std::string>().empty()) {
        throw SbomError(SbomErrc::MissingComponentName, "component without a name");
    }

    Component c;
    c.name = lowercase(name_it->get<std::string>());
    if (auto v = j.find("version"); v != j.end() && v->is_string()) {
        auto s = v->get<std::string>();
        if (!s.empty() && s != "unknown") c.version = s;
    }

    bool has_source = false;
    if (auto props = j.find("properties"); props != j.end() && props->is_array()) {
        for (const auto& p : *props) {
            if (!p.is_object() || !p.contains("name") || !p.contains("value")) continue;
            if (!p["name"].is_string() || !p["value"].is_string()) continue;
            auto key = p["name"].get<std::string>();
            auto value = p["value"].get<std::string>();
            if (key == kSourceProperty) {
                if (auto s = source_from_string(value)) {
                    c.source = *s;
                    has_source = true;
                }
            } else if (key == kEvidenceProperty) {
                c.evidence.push_back(value);
            }
        }
    }
    if (!has_source) c.source = Source::ExternalSbom;

    if (auto p = j.find("cpe"); p != j.end() && p->is_string()) {
        try {
            c.cpe = cpe::parse_cpe(p->get<std::string>());
        } catch (const cpe::CpeError&) {
            // fall through to synthesis
        }
    }
    if (!c.cpe) c.cpe = c.effective_cpe();

    for (const auto& [key, value] : j.items()) {
        if (key != "type" && key != "name" && key != "version" && key != "cpe" &&
            key != "properties") {
            c.extra[key] = value;
        }
    }
    return c;
}

}  // namespace

std::string_view to_string(Source s) {
    switch (s) {
        case Source::FilesystemCatalog: return "filesystem-catalog";
        case Source::BinaryString: return "binary-string";
        case Source::CcppBuildFile: return "ccpp-build-file";
        case Source::ExternalSbom: return "external-sbom";
    }
    return "external-sbom";
}

std::optional<Source> source_from_string(std::string_view s) {
    for (auto src : {Source::FilesystemCatalog, Source::BinaryString, Source::CcppBuildFile,
                     Source::ExternalSbom}) {
        if (to_string(src) == s) return src;
    }
    return std::nullopt;
}

cpe::CpeName Component::effective_cpe() const {
    if (cpe) return *cpe;
    return cpe::CpeName::make('a', name, name, version.value_or(""));
}

Component make_component(std::string_view name, std::optional<std::string> version, Source source,
                         std::vector<std::string> evidence,
                         std::optional<std::pair<std::string, std::string>> vendor_product) {
    Component c;
    c.name = lowercase(name);
    if (version && version->empty()) version.reset();
    c.version = std::move(version);
    c.source = source;
    c.evidence = std::move(evidence);
    const std::string vendor = vendor_product ? vendor_product->first : c.name;
    c.cpe = cpe::CpeName::make('a', vendor, c.name, c.version.value_or(""));
    return c;
}

bool component_less(const Component& a, const Component& b) {
    if (a.name != b.name) return a.name < b.name;
    if (a.version.has_value() != b.version.has_value()) return !a.version.has_value();
    if (a.version && *a.version != *b.version) {
        auto c = cpe::compare_versions(*a.version, *b.version);
        if (c != 0) return c < 0;
        return *a.version < *b.version;
    }
    return a.source < b.source;
}

SbomDocument parse_sbom(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SbomError(SbomErrc::MalformedDocument, std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw SbomError(SbomErrc::MalformedDocument, "SBOM root is not an object");
    auto format = root.find("bomFormat");
    if (format == root.end() || *format != "CycloneDX") {
        throw SbomError(SbomErrc::MalformedDocument, "bomFormat is not CycloneDX");
    }

    SbomDocument doc;
    doc.created_at = std::string(kEpoch);
    doc.generator = "unknown";
    if (auto meta = root.find("metadata"); meta != root.end() && meta->is_object()) {
        if (auto ts = meta->find("timestamp"); ts != meta->end() && ts->is_string()) {
            doc.created_at = ts->get<std::string>();
        }
        if (auto comp = meta->find("component"); comp != meta->end() && comp->is_object()) {
            if (auto n = comp->find("name"); n != comp->end() && n->is_string()) {
                doc.target_name = n->get<std::string>();
            }
        }
        if (auto tools = meta->find("tools"); tools != meta->end()) {
            const json* list = nullptr;
            if (tools->is_array()) {
                list = &*tools;
            } else if (tools->is_object() && tools->contains("components")) {
                list = &(*tools)["components"];
            }
            if (list && list->is_array() && !list->empty() && (*list)[0].is_object()) {
                if (auto n = (*list)[0].find("name"); n != (*list)[0].end() && n->is_string()) {
                    doc.generator = n->get<std::string>();
                }
            }
        }
    }

    if (auto comps = root.find("components"); comps != root.end()) {
        if (!comps->is_array()) throw SbomError(SbomErrc::MalformedDocument, "components is not an array");
        std::map<std::tuple<std::string, std::optional<std::string>, Source>, std::size_t> seen;
        for (const auto& j : *comps) {
            auto c = parse_component(j);
            auto key = std::make_tuple(c.name, c.version, c.source);
            if (auto it = seen.find(key); it != seen.end()) {
                append_unique(doc.components[it->second].evidence, c.evidence);
                continue;
            }
            seen.emplace(std::move(key), doc.components.size());
            doc.components.push_back(std::move(c));
        }
    }
    return doc;
}

SbomDocument load_sbom(const std::filesystem::path& file) {
    return parse_sbom(read_file(file));
}

std::string serialize_sbom(const SbomDocument& doc) {
    ordered_json root;
    root["bomFormat"] = "CycloneDX";
    root["specVersion"] = "1.4";
    root["version"] = 1;
    root["metadata"] = {
        {"timestamp", doc.created_at},
        {"tools", ordered_json::array({{{"name", doc.generator}}})},
        {"component", {{"type", "application"}, {"name", doc.target_name}}},
    };
    auto comps = ordered_json::array();
    for (const auto& c : doc.components) {
        ordered_json j;
        j["type"] = "library";
        j["name"] = c.name;
        j["version"] = c.version_or_unknown();
        j["cpe"] = cpe::format_cpe(c.effective_cpe());
        auto props = ordered_json::array();
        props.push_back({{"name", kSourceProperty}, {"value", to_string(c.source)}});
        for (const auto& e : c.evidence) props.push_back({{"name", kEvidenceProperty}, {"value", e}});
        j["properties"] = std::move(props);
        comps.push_back(std::move(j));
    }
    root["components"] = std::move(comps);
    return root.dump(2) + "\n";
}

void emit_sbom(const SbomDocument& doc, const std::filesystem::path& file) {
    write_file_atomic(file, serialize_sbom(doc));
}

SbomDocument merge_sboms(std::span<const SbomDocument> docs) {
    SbomDocument out;
    if (docs.empty()) return out;
    out.target_name = docs.front().target_name;
    out.created_at = docs.front().created_at;
    out.generator = docs.front().generator;

    std::map<std::pair<std::string, std::optional<std::string>>, Component> by_identity;
    for (const auto& doc : docs) {
        for (const auto& c : doc.components) {
            auto key = std::make_pair(c.name, c.version);
            auto [it, inserted] = by_identity.try_emplace(key, c);
            if (inserted) continue;
            auto& existing = it->second;
            if (c.source < existing.source) {
                auto evidence = std::move(existing.evidence);
                existing = c;
                existing.evidence = std::move(evidence);
            }
            append_unique(existing.evidence, c.evidence);
        }
    }
    for (auto& [key, c] : by_identity) out.components.push_back(std::move(c));
    std::sort(out.components.begin(), out.components.end(), component_less);
    return out;
}

}  // namespace unibom::sbom
