#include "internal.hpp"

#include "unibom/fsutil.hpp"

#include <algorithm>
#include <cstdio>

namespace unibom::firmware {

namespace {

namespace fs = std::filesystem;
using detail::CapExceeded;
using detail::CarveError;
using detail::CarveOutcome;
using detail::OutputTree;

std::string hex_offset(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%llX", static_cast<unsigned long long>(v));
    return buf;
}

std::string rel_string(const fs::path& p, const fs::path& base) {
    return p.lexically_relative(base).generic_string();
}

void remove_quietly(const fs::path& p) {
    std::error_code ec;
    fs::remove_all(p, ec);
}

void remove_if_empty(const fs::path& p) {
    std::error_code ec;
    if (fs::is_directory(p, ec) && fs::is_empty(p, ec)) fs::remove(p, ec);
}

CarveOutcome run_carver(FormatId f, std::string_view data, OutputTree& out) {
    switch (f) {
        case FormatId::Gzip: return detail::carve_gzip(data, out);
        case FormatId::Xz: return detail::carve_xz(data, out);
        case FormatId::Tar: return detail::carve_tar(data, out);
        case FormatId::CpioNewc: return detail::carve_cpio(data, out);
        case FormatId::SquashfsV4: return detail::carve_squashfs(data, out);
        case FormatId::Jffs2: return {detail::jffs2_length(data), CarveStatus::DetectedOnly};
    }
    throw CarveError("unsupported format");
}

std::vector<fs::path> regular_files(const fs::path& dir) {
    std::vector<fs::path> files;
    std::error_code ec;
    for (fs::recursive_directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
        if (it->is_regular_file(ec) && !it->is_symlink(ec)) files.push_back(it->path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

struct Context {
    fs::path workdir;
    bool recursive;
    const ExtractOptions& options;
    bool depth_warned = false;
};

ExtractionReport extract_at(const fs::path& image, const fs::path& shown_path, const fs::path& out_base,
                            int depth, Context& ctx) {
    const auto data = read_file(image);
    ExtractionReport report;
    report.image_path = shown_path;

    const auto container = out_base / ("_" + image.filename().string() + ".extracted");
    std::uint64_t covered_end = 0;

    for (const auto& m : scan_signatures(data)) {
        if (m.offset < covered_end) continue;  // inside something already carved

        CarveResult carve;
        carve.offset = m.offset;
        carve.format_id = m.format_id;
        const auto dir = container / hex_offset(m.offset);
        remove_quietly(dir);
        const auto where = "offset 0x" + hex_offset(m.offset) + " (" + std::string(to_string(m.format_id)) + "): ";

        std::vector<std::string> carve_warnings;
        OutputTree tree(dir, ctx.options.max_output_bytes, carve_warnings);
        try {
            auto outcome = run_carver(m.format_id, std::string_view(data).substr(m.offset), tree);
            carve.status = outcome.status;
            carve.carved_length = outcome.length;
            covered_end = m.offset + outcome.length;
            if (outcome.status == CarveStatus::Unpacked) {
                carve.output_dir = fs::path(rel_string(dir, ctx.workdir));
            } else {
                remove_quietly(dir);
            }
        } catch (const CapExceeded& e) {
            carve_warnings.push_back(e.what());
            carve.status = CarveStatus::Unpacked;  // partial output kept
            carve.output_dir = fs::path(rel_string(dir, ctx.workdir));
        } catch (const CarveError& e) {
            carve_warnings.push_back(e.what());
            carve.status = CarveStatus::Corrupt;
            remove_quietly(dir);
        } catch (const std::bad_alloc&) {
            carve_warnings.push_back("out of memory");
            carve.status = CarveStatus::Corrupt;
            remove_quietly(dir);
        }
        for (auto& w : carve_warnings) report.warnings.push_back(where + w);
        report.carves.push_back(std::move(carve));
    }
    remove_if_empty(container);
    if (!report.carves.empty()) report.recursion_depth_reached = depth;

    if (!ctx.recursive) return report;
    for (const auto& carve : report.carves) {
        if (carve.status != CarveStatus::Unpacked || !carve.output_dir) continue;
        for (const auto& file : regular_files(ctx.workdir / *carve.output_dir)) {
            if (depth >= ctx.options.max_depth) {
                if (!ctx.depth_warned) {
                    report.warnings.push_back("recursion depth limit of " +
                                              std::to_string(ctx.options.max_depth) + " reached");
                    ctx.depth_warned = true;
                }
                break;
            }
            ExtractionReport sub;
            try {
                sub = extract_at(file, rel_string(file, ctx.workdir), file.parent_path(), depth + 1, ctx);
            } catch (const IoError& e) {
                report.warnings.push_back(e.what());
                continue;
            }
            if (sub.carves.empty()) continue;
            report.recursion_depth_reached = std::max(report.recursion_depth_reached, sub.recursion_depth_reached);
            report.nested.push_back(std::move(sub));
        }
    }
    return report;
}

}  // namespace

ExtractionReport extract(const fs::path& image, const fs::path& workdir, bool recursive,
                         const ExtractOptions& options) {
    std::error_code ec;
    if (!fs::is_regular_file(image, ec)) throw IoError("not a readable file: " + image.string());
    fs::create_directories(workdir, ec);
    if (ec || !fs::is_directory(workdir)) throw IoError("cannot create workdir " + workdir.string());

    remove_quietly(workdir / ("_" + image.filename().string() + ".extracted"));
    Context ctx{workdir, recursive, options};
    auto report = extract_at(image, image, workdir, 1, ctx);
    if (options.write_report) {
        write_file_atomic(workdir / "extraction-report.json", to_json(report).dump(2) + "\n");
    }
    return report;
}

nlohmann::json to_json(const ExtractionReport& report) {
    using nlohmann::json;
    json carves = json::array();
    for (const auto& c : report.carves) {
        carves.push_back({
            {"offset", c.offset},
            {"format", to_string(c.format_id)},
            {"carved_length", c.carved_length ? json(*c.carved_length) : json(nullptr)},
            {"status", to_string(c.status)},
            {"output_dir", c.output_dir ? json(c.output_dir->generic_string()) : json(nullptr)},
        });
    }
    json nested = json::array();
    for (const auto& n : report.nested) nested.push_back(to_json(n));
    return {
        {"image_path", report.image_path.generic_string()},
        {"carves", std::move(carves)},
        {"recursion_depth_reached", report.recursion_depth_reached},
        {"warnings", report.warnings},
        {"nested", std::move(nested)},
    };
}

}  // namespace unibom::firmware
