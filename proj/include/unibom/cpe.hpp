#pragma once

#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace unibom::cpe {

enum class CpeErrc { BadPrefix, WrongFieldCount, BadPart };

class CpeError : public std::runtime_error {
public:
    CpeError(CpeErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    CpeErrc code() const noexcept { return code_; }

private:
    CpeErrc code_;
};

/// One CPE attribute: `*` (Any), `-` (NotApplicable) or a lowercase literal.
class AttributeValue {
public:
    enum class Kind { Any, NotApplicable, Literal };

    AttributeValue() = default;
    static AttributeValue any() { return {}; }
    static AttributeValue not_applicable();
    /// Lowercases `text`. Empty text yields Any.
    static AttributeValue literal(std::string_view text);

    Kind kind() const noexcept { return kind_; }
    bool is_any() const noexcept { return kind_ == Kind::Any; }
    bool is_na() const noexcept { return kind_ == Kind::NotApplicable; }
    bool is_literal() const noexcept { return kind_ == Kind::Literal; }
    const std::string& text() const noexcept { return literal_; }

    bool operator==(const AttributeValue&) const = default;

private:
    Kind kind_ = Kind::Any;
    std::string literal_;
};

struct CpeName {
    AttributeValue part;
    AttributeValue vendor;
    AttributeValue product;
    AttributeValue version;
    AttributeValue update;
    AttributeValue edition;
    AttributeValue language;
    AttributeValue sw_edition;
    AttributeValue target_sw;
    AttributeValue target_hw;
    AttributeValue other;

    bool operator==(const CpeName&) const = default;

    /// {part, vendor, product, version} with every other attribute Any.
    /// An empty version yields Any.
    static CpeName make(char part, std::string_view vendor, std::string_view product,
                        std::string_view version);
};

CpeName parse_cpe(std::string_view text);
std::string format_cpe(const CpeName& name);

/// Segment-wise version key: each dot-separated segment is split into a
/// leading digit run and a trailing alpha run.
class VersionKey {
public:
    struct Segment {
        std::string digits;  // leading zeros stripped, empty means 0
        std::string alpha;   // lowercased residue
        bool operator==(const Segment&) const = default;
    };

    explicit VersionKey(std::string_view version);

    const std::vector<Segment>& segments() const noexcept { return segments_; }

    std::strong_ordering operator<=>(const VersionKey& other) const;
    bool operator==(const VersionKey& other) const { return segments_ == other.segments_; }

private:
    std::vector<Segment> segments_;
};

std::strong_ordering compare_versions(std::string_view a, std::string_view b);

struct VersionBound {
    std::string version;
    bool inclusive = true;
    bool operator==(const VersionBound&) const = default;
};

/// A CPE pattern plus an optional version range. When either bound is set,
/// the pattern's version must be Any.
struct MatchCriterion {
    CpeName pattern;
    std::optional<VersionBound> version_start;
    std::optional<VersionBound> version_end;

    bool has_range() const noexcept { return version_start || version_end; }
    bool operator==(const MatchCriterion&) const = default;
};

/// Builds a criterion that matches exactly `name` (used for reflexivity checks).
MatchCriterion criterion_from(const CpeName& name);

struct MatchOptions {
    /// Lets a candidate whose version is Any satisfy a range criterion.
    bool match_unversioned = false;
};

bool match_cpe(const CpeName& candidate, const MatchCriterion& criterion,
               const MatchOptions& options = {});

}  // namespace unibom::cpe
