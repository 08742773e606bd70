#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace unibom {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so the destination is either
/// the old content or the complete new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Current UTC time as RFC 3339 with second precision (`2024-05-01T12:00:00Z`).
std::string utc_now_rfc3339();

}  // namespace unibom
