#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace testsupport {

namespace fs = std::filesystem;

fs::path fixture_dir();
std::string fixture(std::string_view relative);  // file contents
fs::path fixture_path(std::string_view relative);

/// Fresh directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(std::string_view rel) const { return path_ / std::string(rel); }

private:
    fs::path path_;
};

void write(const fs::path& p, std::string_view data);
std::string slurp(const fs::path& p);

/// Relative path -> content for every regular file below root.
std::map<std::string, std::string> tree_snapshot(const fs::path& root);

std::string gzip(std::string_view data, std::optional<std::string> fname = std::nullopt);
std::string xz(std::string_view data);
std::string zlib_compress(std::string_view data);

class CpioWriter {
public:
    CpioWriter& file(std::string_view name, std::string_view data, std::uint32_t mode = 0100644);
    CpioWriter& dir(std::string_view name);
    CpioWriter& symlink(std::string_view name, std::string_view target);
    std::string finish();

private:
    void entry(std::string_view name, std::uint32_t mode, std::string_view data);
    std::string out_;
    std::uint32_t ino_ = 1;
};

class TarWriter {
public:
    TarWriter& file(std::string_view name, std::string_view data, std::uint32_t mode = 0644);
    TarWriter& dir(std::string_view name);
    TarWriter& symlink(std::string_view name, std::string_view target);
    std::string finish();
    /// Raw header block, for corrupting tests.
    static std::string header(std::string_view name, char type, std::uint64_t size, std::uint32_t mode,
                              std::string_view link = {});

private:
    std::string out_;
};

/// Minimal squashfs 4.0 writer: gzip data blocks and fragments, uncompressed
/// metadata blocks, 4 KiB block size.
class SquashfsWriter {
public:
    SquashfsWriter& file(std::string_view path, std::string_view data, std::uint16_t mode = 0644);
    SquashfsWriter& dir(std::string_view path);
    SquashfsWriter& symlink(std::string_view path, std::string_view target);
    SquashfsWriter& compressor(std::uint16_t id) {
        compressor_ = id;
        return *this;
    }
    std::string finish();

private:
    struct Node {
        enum Kind { Dir, File, Link } kind = Dir;
        std::string data;  // content or link target
        std::uint16_t mode = 0755;
        std::map<std::string, Node> children;
    };
    Node& parent_of(std::string_view path, std::string& leaf);

    Node root_;
    std::uint16_t compressor_ = 1;
};

/// Deterministic byte soup.
std::string random_bytes(std::mt19937_64& rng, std::size_t n);

}  // namespace testsupport
