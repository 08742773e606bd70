#include "unibom/cpe.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace unibom::cpe {

namespace {

constexpr std::string_view kPrefix = "cpe:2.3:";
constexpr std::size_t kFieldCount = 13;

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Splits on unescaped ':' and keeps escape sequences intact.
std::vector<std::string> split_fields(std::string_view text) {
    std::vector<std::string> fields(1);
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\\' && i + 1 < text.size()) {
            fields.back().push_back(c);
            fields.back().push_back(text[++i]);
        } else if (c == ':') {
            fields.emplace_back();
        } else {
            fields.back().push_back(c);
        }
    }
    return fields;
}

AttributeValue decode_field(std::string_view raw) {
    if (raw.empty() || raw == "*") return AttributeValue::any();
    if (raw == "-") return AttributeValue::not_applicable();
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\\' && i + 1 < raw.size()) ++i;
        out.push_back(raw[i]);
    }
    return AttributeValue::literal(out);
}

std::string encode_field(const AttributeValue& v) {
    switch (v.kind()) {
        case AttributeValue::Kind::Any: return "*";
        case AttributeValue::Kind::NotApplicable: return "-";
        case AttributeValue::Kind::Literal: break;
    }
    if (v.text() == "-") return "\\-";
    std::string out;
    out.reserve(v.text().size());
    for (char c : v.text()) {
        if (c == '\\' || c == ':' || c == '*' || c == '?') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::array<AttributeValue*, 11> attributes(CpeName& n) {
    return {&n.part,     &n.vendor,     &n.product,   &n.version,   &n.update, &n.edition,
            &n.language, &n.sw_edition, &n.target_sw, &n.target_hw, &n.other};
}

std::array<const AttributeValue*, 11> attributes(const CpeName& n) {
    return {&n.part,     &n.vendor,     &n.product,   &n.version,   &n.update, &n.edition,
            &n.language, &n.sw_edition, &n.target_sw, &n.target_hw, &n.other};
}

bool attribute_matches(const AttributeValue& pattern, const AttributeValue& candidate) {
    switch (pattern.kind()) {
        case AttributeValue::Kind::Any: return true;
        case AttributeValue::Kind::NotApplicable: return candidate.is_na();
        case AttributeValue::Kind::Literal:
            return candidate.is_literal() && candidate.text() == pattern.text();
    }
    return false;
}

}  // namespace

AttributeValue AttributeValue::not_applicable() {
    AttributeValue v;
    v.kind_ = Kind::NotApplicable;
    return v;
}

AttributeValue AttributeValue::literal(std::string_view text) {
    AttributeValue v;
    if (text.empty()) return v;
    v.kind_ = Kind::Literal;
    v.literal_ = to_lower(text);
    return v;
}

CpeName CpeName::make(char part, std::string_view vendor, std::string_view product,
                      std::string_view version) {
    CpeName n;
    n.part = AttributeValue::literal(std::string(1, part));
    n.vendor = AttributeValue::literal(vendor);
    n.product = AttributeValue::literal(product);
    n.version = AttributeValue::literal(version);
    return n;
}

CpeName parse_cpe(std::string_view text) {
    if (!text.starts_with(kPrefix)) {
        throw CpeError(CpeErrc::BadPrefix, "not a CPE 2.3 formatted string: " + std::string(text));
    }
    auto fields = split_fields(text);
    if (fields.size() != kFieldCount) {
        throw CpeError(CpeErrc::WrongFieldCount, "expected 13 fields, got " +
                                                     std::to_string(fields.size()) + ": " +
                                                     std::string(text));
    }
    CpeName name;
    auto attrs = attributes(name);
    for (std::size_t i = 0; i < attrs.size(); ++i) *attrs[i] = decode_field(fields[i + 2]);

    const auto& part = name.part;
    if (!part.is_literal() || (part.text() != "a" && part.text() != "o" && part.text() != "h")) {
        throw CpeError(CpeErrc::BadPart, "part must be one of a, o, h: " + std::string(text));
    }
    return name;
}

std::string format_cpe(const CpeName& name) {
    std::string out(kPrefix);
    bool first = true;
    for (const auto* attr : attributes(name)) {
        if (!first) out.push_back(':');
        first = false;
        out += encode_field(*attr);
    }
    return out;
}

MatchCriterion criterion_from(const CpeName& name) {
    return MatchCriterion{name, std::nullopt, std::nullopt};
}

bool match_cpe(const CpeName& candidate, const MatchCriterion& criterion,
               const MatchOptions& options) {
    auto pattern_attrs = attributes(criterion.pattern);
    auto candidate_attrs = attributes(candidate);
    for (std::size_t i = 0; i < pattern_attrs.size(); ++i) {
        if (!attribute_matches(*pattern_attrs[i], *candidate_attrs[i])) return false;
    }
    if (!criterion.has_range()) return true;

    if (!candidate.version.is_literal()) return options.match_unversioned;

    const auto& v = candidate.version.text();
    if (const auto& lo = criterion.version_start) {
        auto c = compare_versions(v, lo->version);
        if (c < 0 || (c == 0 && !lo->inclusive)) return false;
    }
    if (const auto& hi = criterion.version_end) {
        auto c = compare_versions(v, hi->version);
        if (c > 0 || (c == 0 && !hi->inclusive)) return false;
    }
    return true;
}

}  // namespace unibom::cpe
