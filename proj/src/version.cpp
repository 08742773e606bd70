#include "unibom/cpe.hpp"

#include <cctype>

namespace unibom::cpe {

VersionKey::VersionKey(std::string_view version) {
    std::size_t pos = 0;
    while (true) {
        auto dot = version.find('.', pos);
        auto seg = version.substr(pos, dot == std::string_view::npos ? std::string_view::npos
                                                                     : dot - pos);
        Segment s;
        std::size_t i = 0;
        while (i < seg.size() && std::isdigit(static_cast<unsigned char>(seg[i]))) ++i;
        auto digits = seg.substr(0, i);
        while (!digits.empty() && digits.front() == '0') digits.remove_prefix(1);
        s.digits = std::string(digits);
        for (char c : seg.substr(i)) {
            s.alpha.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
        segments_.push_back(std::move(s));
        if (dot == std::string_view::npos) break;
        pos = dot + 1;
    }
}

namespace {

std::strong_ordering compare_digit_runs(const std::string& a, const std::string& b) {
    if (a.size() != b.size()) return a.size() <=> b.size();
    return a.compare(b) <=> 0;
}

std::strong_ordering compare_alpha_runs(const std::string& a, const std::string& b) {
    // Empty sorts before any non-empty run; plain lexicographic order otherwise.
    if (a.empty() || b.empty()) return !a.empty() <=> !b.empty();
    return a.compare(b) <=> 0;
}

}  // namespace

std::strong_ordering VersionKey::operator<=>(const VersionKey& other) const {
    const auto n = std::min(segments_.size(), other.segments_.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& x = segments_[i];
        const auto& y = other.segments_[i];
        if (auto c = compare_digit_runs(x.digits, y.digits); c != 0) return c;
        if (auto c = compare_alpha_runs(x.alpha, y.alpha); c != 0) return c;
    }
    return segments_.size() <=> other.segments_.size();
}

std::strong_ordering compare_versions(std::string_view a, std::string_view b) {
    return VersionKey(a) <=> VersionKey(b);
}

}  // namespace unibom::cpe
