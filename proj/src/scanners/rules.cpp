#include "unibom/bundled.hpp"
#include "unibom/scanners.hpp"

#include <cctype>
#include <sstream>

namespace unibom::scan {

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

VendorProduct parse_vendor_product(const std::string& text, int lineno) {
    auto colon = text.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw RulesError("rules line " + std::to_string(lineno) + ": expected vendor:product, got '" +
                         text + "'");
    }
    return {lower(text.substr(0, colon)), lower(text.substr(colon + 1))};
}

bool is_version_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::string_view to_string(CcppRuleKind k) {
    switch (k) {
        case CcppRuleKind::CMakeFindPackage: return "cmake-find-package";
        case CcppRuleKind::MakefileLinkFlag: return "makefile-link-flag";
        case CcppRuleKind::ConanfileRequires: return "conanfile-requires";
        case CcppRuleKind::PkgConfigRequires: return "pkgconfig-requires";
        case CcppRuleKind::WellKnownHeader: return "well-known-header";
    }
    return "";
}

std::vector<VersionStringPattern::Hit> VersionStringPattern::find_all(std::string_view data) const {
    std::vector<Hit> hits;
    std::size_t pos = 0;
    while ((pos = data.find(prefix, pos)) != std::string_view::npos) {
        std::size_t i = pos + prefix.size();
        const std::size_t start = i;
        // digits ('.' alnum+)+
        while (i < data.size() && std::isdigit(static_cast<unsigned char>(data[i]))) ++i;
        bool ok = i > start;
        int dots = 0;
        while (ok && i + 1 < data.size() && data[i] == '.' && is_version_char(data[i + 1])) {
            ++i;
            while (i < data.size() && is_version_char(data[i])) ++i;
            ++dots;
        }
        // Trailing letters directly on the last numeric run (1.1.1n) are
        // consumed by the alnum loop above.
        if (ok && dots > 0 && data.substr(i, suffix.size()) == suffix) {
            hits.push_back({std::string(data.substr(start, i - start)), pos});
            pos = i + suffix.size();
            continue;
        }
        pos += 1;
    }
    return hits;
}

ScannerRules ScannerRules::parse(std::string_view text) {
    ScannerRules rules;
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    std::string section;
    while (std::getline(in, raw)) {
        ++lineno;
        auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw RulesError("rules line " + std::to_string(lineno) + ": bad section");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw RulesError("rules line " + std::to_string(lineno) + ": expected key = value");
        }
        auto key = lower(trim(std::string_view(line).substr(0, eq)));
        auto value = trim(std::string_view(line).substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }

        if (section == "version-string") {
            auto slot = value.find("{version}");
            if (slot == std::string::npos || slot == 0) {
                throw RulesError("rules line " + std::to_string(lineno) +
                                 ": version pattern needs a non-empty prefix and a {version} slot");
            }
            rules.version_strings.push_back(
                {parse_vendor_product(key, lineno), value.substr(0, slot), value.substr(slot + 9)});
            continue;
        }

        CcppRuleKind kind;
        if (section == "header") kind = CcppRuleKind::WellKnownHeader;
        else if (section == "cmake") kind = CcppRuleKind::CMakeFindPackage;
        else if (section == "link") kind = CcppRuleKind::MakefileLinkFlag;
        else if (section == "conan") kind = CcppRuleKind::ConanfileRequires;
        else if (section == "pkgconfig") kind = CcppRuleKind::PkgConfigRequires;
        else throw RulesError("rules line " + std::to_string(lineno) + ": unknown section '" + section + "'");
        rules.product_maps[kind][key] = parse_vendor_product(value, lineno);
    }
    return rules;
}

const ScannerRules& ScannerRules::bundled() {
    static const ScannerRules rules = parse(unibom::bundled::scanner_rules());
    return rules;
}

std::optional<VendorProduct> ScannerRules::lookup(CcppRuleKind kind, std::string_view token) const {
    auto map = product_maps.find(kind);
    if (map == product_maps.end()) return std::nullopt;
    auto it = map->second.find(lower(std::string(token)));
    if (it == map->second.end()) return std::nullopt;
    return it->second;
}

}  // namespace unibom::scan
