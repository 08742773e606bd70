#include "internal.hpp"

#include <algorithm>
#include <cctype>

namespace unibom::firmware::detail {

namespace {

std::string_view cstr_field(std::string_view block, std::size_t at, std::size_t len) {
    auto f = block.substr(at, len);
    return f.substr(0, f.find('\0'));
}

std::optional<std::uint64_t> parse_octal(std::string_view f) {
    // GNU base-256 for large values.
    if (!f.empty() && (static_cast<unsigned char>(f[0]) & 0x80)) {
        std::uint64_t v = static_cast<unsigned char>(f[0]) & 0x7F;
        for (std::size_t i = 1; i < f.size(); ++i) v = v << 8 | static_cast<unsigned char>(f[i]);
        return v;
    }
    std::uint64_t v = 0;
    bool any = false;
    for (char c : f) {
        if (c == '\0' || c == ' ') {
            if (any) break;
            continue;
        }
        if (c < '0' || c > '7') return std::nullopt;
        v = v * 8 + static_cast<std::uint64_t>(c - '0');
        any = true;
    }
    return v;
}

bool tar_checksum_ok(std::string_view h) {
    auto stored = parse_octal(h.substr(148, 8));
    if (!stored) return false;
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < 512; ++i) {
        sum += (i >= 148 && i < 156) ? ' ' : static_cast<unsigned char>(h[i]);
    }
    return sum == *stored;
}

bool all_zero(std::string_view b) {
    return std::all_of(b.begin(), b.end(), [](char c) { return c == '\0'; });
}

void apply_pax(std::string_view records, std::string& path, std::string& linkpath) {
    while (!records.empty()) {
        auto sp = records.find(' ');
        if (sp == std::string_view::npos) return;
        std::size_t len = 0;
        for (char c : records.substr(0, sp)) {
            if (!std::isdigit(static_cast<unsigned char>(c))) return;
            len = len * 10 + static_cast<std::size_t>(c - '0');
        }
        if (len <= sp + 1 || len > records.size()) return;
        auto kv = records.substr(sp + 1, len - sp - 2);  // drop trailing '\n'
        records.remove_prefix(len);
        auto eq = kv.find('=');
        if (eq == std::string_view::npos) continue;
        auto key = kv.substr(0, eq);
        if (key == "path") path = std::string(kv.substr(eq + 1));
        else if (key == "linkpath") linkpath = std::string(kv.substr(eq + 1));
    }
}

bool hex_field(std::string_view d, std::size_t at, std::uint32_t& out) {
    out = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        const char c = d[at + i];
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else return false;
        out = out << 4 | static_cast<std::uint32_t>(v);
    }
    return true;
}

std::size_t align4(std::size_t n) { return (n + 3) & ~std::size_t{3}; }

}  // namespace

bool tar_header_ok(std::string_view d) {
    if (d.size() < 512) return false;
    auto magic = d.substr(257, 6);
    if (magic != std::string_view("ustar\0", 6) && magic != "ustar ") return false;
    return tar_checksum_ok(d.substr(0, 512));
}

CarveOutcome carve_tar(std::string_view data, OutputTree& out) {
    if (!tar_header_ok(data)) throw CarveError("bad tar header");
    std::size_t pos = 0;
    std::string long_name, long_link, pax_path, pax_link;
    bool clean_end = false;
    while (pos + 512 <= data.size()) {
        auto h = data.substr(pos, 512);
        if (all_zero(h)) {
            pos += 512;
            if (pos + 512 <= data.size() && all_zero(data.substr(pos, 512))) pos += 512;
            clean_end = true;
            break;
        }
        if (!tar_checksum_ok(h)) {
            out.warn("tar: bad header checksum at +" + std::to_string(pos) + ", stopping");
            break;
        }
        auto size = parse_octal(h.substr(124, 12));
        if (!size) {
            out.warn("tar: bad size field at +" + std::to_string(pos));
            break;
        }
        const std::size_t data_at = pos + 512;
        const std::size_t padded = (*size + 511) & ~std::uint64_t{511};
        if (data_at + *size > data.size()) {
            out.warn("tar: truncated member at +" + std::to_string(pos));
            pos = data.size();
            break;
        }
        auto body = data.substr(data_at, *size);
        const char type = h[156];

        std::string name(cstr_field(h, 0, 100));
        auto prefix = cstr_field(h, 345, 155);
        if (!prefix.empty() && h.substr(257, 6) == std::string_view("ustar\0", 6)) {
            name = std::string(prefix) + "/" + name;
        }
        std::string link(cstr_field(h, 157, 100));
        if (!long_name.empty()) name = std::exchange(long_name, {});
        if (!long_link.empty()) link = std::exchange(long_link, {});
        if (!pax_path.empty()) name = std::exchange(pax_path, {});
        if (!pax_link.empty()) link = std::exchange(pax_link, {});

        const auto mode = parse_octal(h.substr(100, 8)).value_or(0644);
        switch (type) {
            case '0': case '\0': case '7':
                out.write_file(name, body, (mode & 0111) != 0);
                break;
            case '5': out.make_dir(name); break;
            case '2': out.write_link(name, link); break;
            case '1': out.write_link(name, link); break;  // hardlink: record target
            case 'L': long_name = std::string(body.substr(0, body.find('\0'))); break;
            case 'K': long_link = std::string(body.substr(0, body.find('\0'))); break;
            case 'x': apply_pax(body, pax_path, pax_link); break;
            default: break;  // devices, fifos, global pax headers
        }
        pos = std::min<std::size_t>(data_at + padded, data.size());
    }
    if (!clean_end && out.entries() == 0) throw CarveError("tar: no complete member");
    return {pos, CarveStatus::Unpacked};
}

bool cpio_header_ok(std::string_view d) {
    if (d.size() < 110 || d.substr(0, 6) != "070701") return false;
    std::uint32_t v;
    for (std::size_t at = 6; at < 110; at += 8) {
        if (!hex_field(d, at, v)) return false;
    }
    hex_field(d, 94, v);  // namesize
    return v > 0 && v < 4096;
}

CarveOutcome carve_cpio(std::string_view data, OutputTree& out) {
    if (!cpio_header_ok(data)) throw CarveError("bad cpio header");
    std::size_t pos = 0;
    while (true) {
        if (!cpio_header_ok(data.substr(pos))) {
            if (out.entries() == 0) throw CarveError("cpio: truncated or corrupt header");
            out.warn("cpio: archive ends without trailer at +" + std::to_string(pos));
            return {pos, CarveStatus::Unpacked};
        }
        std::uint32_t mode, filesize, namesize;
        hex_field(data, pos + 14, mode);
        hex_field(data, pos + 54, filesize);
        hex_field(data, pos + 94, namesize);
        const std::size_t name_at = pos + 110;
        const std::size_t data_at = align4(name_at + namesize);
        if (data_at + filesize > data.size()) {
            if (out.entries() == 0) throw CarveError("cpio: truncated member");
            out.warn("cpio: truncated member at +" + std::to_string(pos));
            return {data.size(), CarveStatus::Unpacked};
        }
        std::string name(data.substr(name_at, namesize));
        if (auto nul = name.find('\0'); nul != std::string::npos) name.erase(nul);
        const auto body = data.substr(data_at, filesize);
        const std::size_t next = align4(data_at + filesize);
        if (name == "TRAILER!!!") return {std::min(next, data.size()), CarveStatus::Unpacked};

        switch (mode & 0170000) {
            case 0040000: out.make_dir(name); break;
            case 0100000: out.write_file(name, body, (mode & 0111) != 0); break;
            case 0120000: out.write_link(name, body); break;
            default: break;
        }
        pos = next;
    }
}

}  // namespace unibom::firmware::detail
