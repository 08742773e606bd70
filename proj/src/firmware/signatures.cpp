#include "internal.hpp"

#include "unibom/fsutil.hpp"

#include <algorithm>
#include <array>

namespace unibom::firmware {

using namespace std::string_view_literals;

namespace {

constexpr std::array<Signature, 6> kSignatures = {{
    {FormatId::Gzip, "\x1f\x8b\x08"sv, 0},
    {FormatId::Xz, "\xFD" "7zXZ\0"sv, 0},
    {FormatId::Tar, "ustar"sv, 257},
    {FormatId::CpioNewc, "070701"sv, 0},
    {FormatId::SquashfsV4, "hsqs"sv, 0},
    {FormatId::Jffs2, "\x85\x19"sv, 0},
}};

bool header_ok(FormatId f, std::string_view d) {
    using namespace detail;
    try {
        switch (f) {
            case FormatId::Gzip: return gzip_header_ok(d);
            case FormatId::Xz: return xz_header_ok(d);
            case FormatId::Tar: return tar_header_ok(d);
            case FormatId::CpioNewc: return cpio_header_ok(d);
            case FormatId::SquashfsV4: return squashfs_header_ok(d);
            case FormatId::Jffs2: return jffs2_header_ok(d);
        }
    } catch (const CarveError&) {
    }
    return false;
}

constexpr std::uint16_t kJffs2Magic = 0x1985;

bool jffs2_node_type_ok(std::uint16_t t) {
    switch (t) {
        case 0xE001: case 0xE002: case 0x2003: case 0x2004:
        case 0xE006: case 0xE008: case 0xE009: return true;
        default: return false;
    }
}

bool jffs2_node_at(std::string_view d, std::size_t pos) {
    if (pos + 12 > d.size()) return false;
    using detail::le16, detail::le32;
    if (le16(d, pos) != kJffs2Magic || !jffs2_node_type_ok(le16(d, pos + 2))) return false;
    const auto len = le32(d, pos + 4);
    return len >= 12 && pos + len <= d.size();
}

bool padding_word(std::string_view d, std::size_t pos) {
    if (pos + 4 > d.size()) return false;
    auto w = d.substr(pos, 4);
    return w == "\xFF\xFF\xFF\xFF"sv || w == std::string_view("\0\0\0\0", 4);
}

}  // namespace

namespace detail {

bool jffs2_header_ok(std::string_view d) { return jffs2_node_at(d, 0); }

std::uint64_t jffs2_length(std::string_view d) {
    if (!jffs2_node_at(d, 0)) throw CarveError("bad jffs2 node");
    std::size_t pos = 0, end = 0;
    while (pos < d.size()) {
        if (jffs2_node_at(d, pos)) {
            pos += (le32(d, pos + 4) + 3) & ~std::uint32_t{3};
            end = std::min(pos, d.size());
        } else if (padding_word(d, pos)) {
            pos += 4;
        } else {
            break;
        }
    }
    return end;
}

}  // namespace detail

std::string_view to_string(FormatId f) {
    switch (f) {
        case FormatId::Gzip: return "gzip";
        case FormatId::Xz: return "xz";
        case FormatId::Tar: return "tar";
        case FormatId::CpioNewc: return "cpio-newc";
        case FormatId::SquashfsV4: return "squashfs-v4";
        case FormatId::Jffs2: return "jffs2";
    }
    return "unknown";
}

std::string_view to_string(CarveStatus s) {
    switch (s) {
        case CarveStatus::Unpacked: return "unpacked";
        case CarveStatus::DetectedOnly: return "detected-only";
        case CarveStatus::Corrupt: return "corrupt";
    }
    return "unknown";
}

std::span<const Signature> signature_table() { return kSignatures; }

std::vector<SignatureMatch> scan_signatures(std::string_view image) {
    std::vector<SignatureMatch> out;
    for (const auto& sig : kSignatures) {
        for (auto p = image.find(sig.magic); p != std::string_view::npos; p = image.find(sig.magic, p + 1)) {
            if (p < sig.magic_offset_in_container) continue;
            const auto offset = p - sig.magic_offset_in_container;
            if (header_ok(sig.format_id, image.substr(offset))) out.push_back({offset, sig.format_id});
        }
    }
    std::sort(out.begin(), out.end(), [](const SignatureMatch& a, const SignatureMatch& b) {
        return a.offset != b.offset ? a.offset < b.offset : a.format_id < b.format_id;
    });
    return out;
}

std::vector<SignatureMatch> scan_signatures_file(const std::filesystem::path& image) {
    return scan_signatures(read_file(image));
}

bool looks_like_firmware(const std::filesystem::path& file) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(file, ec)) return false;
    try {
        return !scan_signatures(read_file(file)).empty();
    } catch (const IoError&) {
        return false;
    }
}

}  // namespace unibom::firmware
