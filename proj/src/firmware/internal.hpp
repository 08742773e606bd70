#pragma once

#include "unibom/firmware.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace unibom::firmware::detail {

namespace fs = std::filesystem;

// Input is structurally invalid at this offset.
class CarveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The per-carve output budget ran out.
class CapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::uint16_t le16(std::string_view d, std::size_t at) {
    if (at + 2 > d.size()) throw CarveError("read past end");
    return static_cast<std::uint16_t>(static_cast<unsigned char>(d[at]) |
                                      static_cast<unsigned char>(d[at + 1]) << 8);
}

inline std::uint32_t le32(std::string_view d, std::size_t at) {
    if (at + 4 > d.size()) throw CarveError("read past end");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = v << 8 | static_cast<unsigned char>(d[at + i]);
    return v;
}

inline std::uint64_t le64(std::string_view d, std::size_t at) {
    if (at + 8 > d.size()) throw CarveError("read past end");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = v << 8 | static_cast<unsigned char>(d[at + i]);
    return v;
}

/// Writes archive members below `root`, refusing anything that would land
/// outside it. Symlinks become small text files holding the link target.
class OutputTree {
public:
    OutputTree(fs::path root, std::uint64_t budget, std::vector<std::string>& warnings);

    const fs::path& root() const { return root_; }

    /// Normalized relative path, or nullopt (with a warning) for absolute or
    /// `..` names. "." and empty names yield an empty path.
    std::optional<fs::path> safe_path(std::string_view name);

    void make_dir(std::string_view name);
    void write_file(std::string_view name, std::string_view data, bool executable);
    void write_link(std::string_view name, std::string_view target);

    /// Counts bytes against the budget; throws CapExceeded.
    void charge(std::uint64_t n);

    std::uint64_t written() const { return written_; }
    std::uint64_t remaining() const { return budget_ - written_; }
    std::size_t entries() const { return entries_; }
    void warn(std::string message) { warnings_.push_back(std::move(message)); }

private:
    bool prepare_parent(const fs::path& full, const std::string& name);

    fs::path root_;
    std::uint64_t budget_;
    std::uint64_t written_ = 0;
    std::size_t entries_ = 0;
    std::vector<std::string>& warnings_;
};

struct CarveOutcome {
    std::uint64_t length = 0;
    CarveStatus status = CarveStatus::Unpacked;
};

// Each carver sees the image from the match offset to the end.
CarveOutcome carve_gzip(std::string_view data, OutputTree& out);
CarveOutcome carve_xz(std::string_view data, OutputTree& out);
CarveOutcome carve_tar(std::string_view data, OutputTree& out);
CarveOutcome carve_cpio(std::string_view data, OutputTree& out);
CarveOutcome carve_squashfs(std::string_view data, OutputTree& out);
std::uint64_t jffs2_length(std::string_view data);

// Header sanity checks used by the scanner, data starts at the container.
bool gzip_header_ok(std::string_view data);
bool xz_header_ok(std::string_view data);
bool tar_header_ok(std::string_view data);
bool cpio_header_ok(std::string_view data);
bool squashfs_header_ok(std::string_view data);
bool jffs2_header_ok(std::string_view data);

/// Inflates a zlib (not gzip) stream, as used by squashfs blocks.
std::string zlib_inflate(std::string_view in, std::size_t expected_max);

}  // namespace unibom::firmware::detail
