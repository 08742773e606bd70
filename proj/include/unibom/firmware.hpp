#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace unibom::firmware {

enum class FormatId { Gzip, Xz, Tar, CpioNewc, SquashfsV4, Jffs2 };

std::string_view to_string(FormatId f);

struct Signature {
    FormatId format_id;
    std::string_view magic;
    std::size_t magic_offset_in_container;  // e.g. 257 for tar's "ustar"
};

std::span<const Signature> signature_table();

struct SignatureMatch {
    std::uint64_t offset;
    FormatId format_id;
    bool operator==(const SignatureMatch&) const = default;
};

/// Every offset where a table signature matches and its header passes a
/// sanity check, ascending. Overlapping matches are all reported.
std::vector<SignatureMatch> scan_signatures(std::string_view image);
std::vector<SignatureMatch> scan_signatures_file(const std::filesystem::path& image);

enum class CarveStatus { Unpacked, DetectedOnly, Corrupt };

std::string_view to_string(CarveStatus s);

struct CarveResult {
    std::uint64_t offset = 0;
    FormatId format_id = FormatId::Gzip;
    std::optional<std::uint64_t> carved_length;
    CarveStatus status = CarveStatus::Corrupt;
    std::optional<std::filesystem::path> output_dir;  // relative to workdir
};

struct ExtractionReport {
    std::filesystem::path image_path;
    std::vector<CarveResult> carves;  // ascending offset
    int recursion_depth_reached = 0;
    std::vector<std::string> warnings;
    std::vector<ExtractionReport> nested;  // reports for extracted files that had matches
};

struct ExtractOptions {
    std::uint64_t max_output_bytes = 512ull << 20;  // per carve
    int max_depth = 8;
    bool write_report = true;  // extraction-report.json in workdir
};

/// Carves every match of `image` into `workdir/_<image>.extracted/<OFFSET-HEX>/`.
/// With `recursive`, extracted files are scanned again up to `max_depth`.
/// Per-carve failures are reported as Corrupt; only an unreadable image or an
/// unwritable workdir throws (IoError).
ExtractionReport extract(const std::filesystem::path& image, const std::filesystem::path& workdir,
                         bool recursive, const ExtractOptions& options = {});

nlohmann::json to_json(const ExtractionReport& report);

/// True when any signature in the file passes its header check.
bool looks_like_firmware(const std::filesystem::path& file);

}  // namespace unibom::firmware
