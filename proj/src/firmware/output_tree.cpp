#include "internal.hpp"

#include <fstream>

namespace unibom::firmware::detail {

OutputTree::OutputTree(fs::path root, std::uint64_t budget, std::vector<std::string>& warnings)
    : root_(std::move(root)), budget_(budget), warnings_(warnings) {}

std::optional<fs::path> OutputTree::safe_path(std::string_view name) {
    if (!name.empty() && name.front() == '/') {
        warn("refused absolute entry path: " + std::string(name));
        return std::nullopt;
    }
    fs::path rel;
    std::size_t pos = 0;
    while (pos <= name.size()) {
        auto slash = name.find('/', pos);
        if (slash == std::string_view::npos) slash = name.size();
        auto part = name.substr(pos, slash - pos);
        pos = slash + 1;
        if (part.empty() || part == ".") continue;
        if (part == "..") {
            warn("refused entry escaping the output directory: " + std::string(name));
            return std::nullopt;
        }
        if (part.find('\0') != std::string_view::npos) {
            warn("refused entry with NUL in name");
            return std::nullopt;
        }
        rel /= std::string(part);
    }
    return rel;
}

bool OutputTree::prepare_parent(const fs::path& full, const std::string& name) {
    std::error_code ec;
    fs::create_directories(full.parent_path(), ec);
    if (ec) {
        warn("cannot create parent for " + name + ": " + ec.message());
        return false;
    }
    return true;
}

void OutputTree::charge(std::uint64_t n) {
    if (written_ + n > budget_) {
        written_ = budget_;
        throw CapExceeded("output cap of " + std::to_string(budget_) + " bytes reached");
    }
    written_ += n;
}

void OutputTree::make_dir(std::string_view name) {
    auto rel = safe_path(name);
    if (!rel || rel->empty()) return;
    std::error_code ec;
    fs::create_directories(root_ / *rel, ec);
    if (ec) warn("cannot create directory " + rel->generic_string() + ": " + ec.message());
}

void OutputTree::write_file(std::string_view name, std::string_view data, bool executable) {
    auto rel = safe_path(name);
    if (!rel || rel->empty()) return;
    auto full = root_ / *rel;
    auto shown = rel->generic_string();
    if (!prepare_parent(full, shown)) return;
    std::error_code ec;
    if (fs::is_directory(fs::symlink_status(full, ec))) {
        warn("skipped " + shown + ": a directory exists there");
        return;
    }
    charge(data.size());
    {
        std::ofstream f(full, std::ios::binary | std::ios::trunc);
        if (!f) {
            warn("cannot write " + shown);
            return;
        }
        f.write(data.data(), static_cast<std::streamsize>(data.size()));
    }
    using P = fs::perms;
    auto mode = P::owner_read | P::owner_write | P::group_read | P::others_read;
    if (executable) mode |= P::owner_exec | P::group_exec | P::others_exec;
    fs::permissions(full, mode, ec);
    ++entries_;
}

void OutputTree::write_link(std::string_view name, std::string_view target) {
    write_file(name, target, false);
}

}  // namespace unibom::firmware::detail
