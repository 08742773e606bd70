#include "support.hpp"

#include <lzma.h>
#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace testsupport {

fs::path fixture_dir() { return UNIBOM_FIXTURE_DIR; }

fs::path fixture_path(std::string_view relative) { return fixture_dir() / std::string(relative); }

std::string fixture(std::string_view relative) { return slurp(fixture_path(relative)); }

TempDir::TempDir() {
    std::random_device rd;
    std::ostringstream name;
    name << "unibom-test-" << std::hex << rd() << rd();
    path_ = fs::temp_directory_path() / name.str();
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write(const fs::path& p, std::string_view data) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!f) throw std::runtime_error("cannot write " + p.string());
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> tree_snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    if (!fs::exists(root)) return out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[e.path().lexically_relative(root).generic_string()] = slurp(e.path());
    }
    return out;
}

std::string gzip(std::string_view data, std::optional<std::string> fname) {
    z_stream s{};
    if (deflateInit2(&s, 9, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) throw std::runtime_error("deflate");
    gz_header h{};
    std::string name = fname.value_or("");
    if (fname) h.name = reinterpret_cast<Bytef*>(name.data());
    h.os = 3;
    deflateSetHeader(&s, &h);
    std::string out(deflateBound(&s, data.size()) + 64 + name.size(), '\0');
    s.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    s.avail_in = static_cast<uInt>(data.size());
    s.next_out = reinterpret_cast<Bytef*>(out.data());
    s.avail_out = static_cast<uInt>(out.size());
    if (deflate(&s, Z_FINISH) != Z_STREAM_END) throw std::runtime_error("deflate finish");
    out.resize(s.total_out);
    deflateEnd(&s);
    return out;
}

std::string zlib_compress(std::string_view data) {
    uLongf len = compressBound(data.size());
    std::string out(len, '\0');
    if (compress2(reinterpret_cast<Bytef*>(out.data()), &len, reinterpret_cast<const Bytef*>(data.data()),
                  data.size(), 9) != Z_OK) {
        throw std::runtime_error("compress2");
    }
    out.resize(len);
    return out;
}

std::string xz(std::string_view data) {
    std::string out(lzma_stream_buffer_bound(data.size()), '\0');
    size_t pos = 0;
    if (lzma_easy_buffer_encode(6, LZMA_CHECK_CRC64, nullptr, reinterpret_cast<const uint8_t*>(data.data()),
                                data.size(), reinterpret_cast<uint8_t*>(out.data()), &pos, out.size()) != LZMA_OK) {
        throw std::runtime_error("lzma encode");
    }
    out.resize(pos);
    return out;
}

// cpio newc

namespace {

void pad_to(std::string& s, std::size_t align) {
    while (s.size() % align) s.push_back('\0');
}

std::string hex8(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08X", v);
    return buf;
}

}  // namespace

void CpioWriter::entry(std::string_view name, std::uint32_t mode, std::string_view data) {
    out_ += "070701";
    const std::uint32_t fields[] = {ino_++, mode, 0, 0, 1, 0, static_cast<std::uint32_t>(data.size()),
                                    0, 0, 0, 0, static_cast<std::uint32_t>(name.size() + 1), 0};
    for (auto f : fields) out_ += hex8(f);
    out_ += name;
    out_.push_back('\0');
    pad_to(out_, 4);
    out_ += data;
    pad_to(out_, 4);
}

CpioWriter& CpioWriter::file(std::string_view name, std::string_view data, std::uint32_t mode) {
    entry(name, mode, data);
    return *this;
}

CpioWriter& CpioWriter::dir(std::string_view name) {
    entry(name, 040755, {});
    return *this;
}

CpioWriter& CpioWriter::symlink(std::string_view name, std::string_view target) {
    entry(name, 0120777, target);
    return *this;
}

std::string CpioWriter::finish() {
    entry("TRAILER!!!", 0, {});
    return out_;
}

// ustar

std::string TarWriter::header(std::string_view name, char type, std::uint64_t size, std::uint32_t mode,
                              std::string_view link) {
    std::string h(512, '\0');
    auto put = [&](std::size_t at, std::string_view v) { h.replace(at, v.size(), v); };
    char buf[32];
    put(0, name.substr(0, 100));
    std::snprintf(buf, sizeof buf, "%07o", mode);
    put(100, buf);
    put(108, "0000000");
    put(116, "0000000");
    std::snprintf(buf, sizeof buf, "%011llo", static_cast<unsigned long long>(size));
    put(124, buf);
    put(136, "00000000000");
    put(148, "        ");
    h[156] = type;
    put(157, link.substr(0, 100));
    put(257, std::string_view("ustar\0" "00", 8));
    unsigned sum = 0;
    for (unsigned char c : h) sum += c;
    std::snprintf(buf, sizeof buf, "%06o", sum);
    put(148, buf);
    h[154] = '\0';
    h[155] = ' ';
    return h;
}

TarWriter& TarWriter::file(std::string_view name, std::string_view data, std::uint32_t mode) {
    if (name.size() > 100) {
        // GNU long name record ahead of the real header
        out_ += header("././@LongLink", 'L', name.size() + 1, 0644);
        out_ += name;
        out_ += '\0';
        pad_to(out_, 512);
    }
    out_ += header(name, '0', data.size(), mode);
    out_ += data;
    pad_to(out_, 512);
    return *this;
}

TarWriter& TarWriter::dir(std::string_view name) {
    out_ += header(name, '5', 0, 0755);
    return *this;
}

TarWriter& TarWriter::symlink(std::string_view name, std::string_view target) {
    out_ += header(name, '2', 0, 0777, target);
    return *this;
}

std::string TarWriter::finish() {
    out_.append(1024, '\0');
    return out_;
}

// squashfs

namespace {

constexpr std::uint32_t kBlock = 4096;
constexpr std::size_t kMeta = 8192;

void put16(std::string& s, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) s.push_back(static_cast<char>(v >> (8 * i)));
}
void put32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>(v >> (8 * i)));
}
void put64(std::string& s, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>(v >> (8 * i)));
}
void set32(std::string& s, std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s[at + i] = static_cast<char>(v >> (8 * i));
}
void set16(std::string& s, std::size_t at, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) s[at + i] = static_cast<char>(v >> (8 * i));
}
void set64(std::string& s, std::size_t at, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) s[at + i] = static_cast<char>(v >> (8 * i));
}

// Metadata is stored uncompressed, so a stream position maps to a block
// start by arithmetic alone.
std::uint64_t meta_block(std::size_t pos) { return (pos / kMeta) * (kMeta + 2); }

void emit_meta(std::string& image, const std::string& stream, std::vector<std::uint64_t>* starts = nullptr) {
    for (std::size_t at = 0; at < stream.size(); at += kMeta) {
        const auto len = std::min(kMeta, stream.size() - at);
        if (starts) starts->push_back(image.size());
        put16(image, static_cast<std::uint16_t>(0x8000 | len));
        image.append(stream, at, len);
    }
}

}  // namespace

SquashfsWriter::Node& SquashfsWriter::parent_of(std::string_view path, std::string& leaf) {
    Node* cur = &root_;
    std::size_t pos = 0;
    while (true) {
        auto slash = path.find('/', pos);
        if (slash == std::string_view::npos) {
            leaf = std::string(path.substr(pos));
            return *cur;
        }
        auto& next = cur->children[std::string(path.substr(pos, slash - pos))];
        next.kind = Node::Dir;
        cur = &next;
        pos = slash + 1;
    }
}

SquashfsWriter& SquashfsWriter::file(std::string_view path, std::string_view data, std::uint16_t mode) {
    std::string leaf;
    auto& n = parent_of(path, leaf).children[leaf];
    n.kind = Node::File;
    n.data = std::string(data);
    n.mode = mode;
    return *this;
}

SquashfsWriter& SquashfsWriter::dir(std::string_view path) {
    std::string leaf;
    parent_of(path, leaf).children[leaf].kind = Node::Dir;
    return *this;
}

SquashfsWriter& SquashfsWriter::symlink(std::string_view path, std::string_view target) {
    std::string leaf;
    auto& n = parent_of(path, leaf).children[leaf];
    n.kind = Node::Link;
    n.data = std::string(target);
    n.mode = 0777;
    return *this;
}

std::string SquashfsWriter::finish() {
    struct Written {
        std::uint64_t ref;
        std::uint32_t number;
        std::uint16_t type;
    };
    struct Frag {
        std::uint64_t start;
        std::uint32_t size;
    };

    std::string image(96, '\0');
    std::string inodes, dirs, frag_buf;
    std::vector<Frag> frags;
    std::uint32_t next_number = 1;

    auto flush_frag = [&] {
        if (frag_buf.empty()) return;
        auto z = zlib_compress(frag_buf);
        if (z.size() < frag_buf.size()) {
            frags.push_back({image.size(), static_cast<std::uint32_t>(z.size())});
            image += z;
        } else {
            frags.push_back({image.size(), static_cast<std::uint32_t>(frag_buf.size()) | (1u << 24)});
            image += frag_buf;
        }
        frag_buf.clear();
    };
    auto inode_header = [&](std::uint16_t type, std::uint16_t mode) {
        Written w{meta_block(inodes.size()) << 16 | (inodes.size() % kMeta), next_number++, type};
        put16(inodes, type);
        put16(inodes, mode);
        put16(inodes, 0);
        put16(inodes, 0);
        put32(inodes, 0);
        put32(inodes, w.number);
        return w;
    };

    auto write_file = [&](const Node& n) {
        const std::uint64_t start = image.size();
        std::vector<std::uint32_t> sizes;
        const std::size_t full = n.data.size() / kBlock;
        for (std::size_t i = 0; i < full; ++i) {
            auto chunk = n.data.substr(i * kBlock, kBlock);
            auto z = zlib_compress(chunk);
            if (z.size() < chunk.size()) {
                sizes.push_back(static_cast<std::uint32_t>(z.size()));
                image += z;
            } else {
                sizes.push_back(kBlock | (1u << 24));
                image += chunk;
            }
        }
        std::uint32_t frag = 0xFFFFFFFF, frag_off = 0;
        const std::size_t tail = n.data.size() % kBlock;
        if (tail) {
            if (frag_buf.size() + tail > kBlock) flush_frag();
            frag = static_cast<std::uint32_t>(frags.size());
            frag_off = static_cast<std::uint32_t>(frag_buf.size());
            frag_buf.append(n.data, full * kBlock, tail);
        }
        auto w = inode_header(2, n.mode);
        put32(inodes, static_cast<std::uint32_t>(start));
        put32(inodes, frag);
        put32(inodes, frag_off);
        put32(inodes, static_cast<std::uint32_t>(n.data.size()));
        for (auto s : sizes) put32(inodes, s);
        return w;
    };

    auto write_link = [&](const Node& n) {
        auto w = inode_header(3, n.mode);
        put32(inodes, 1);
        put32(inodes, static_cast<std::uint32_t>(n.data.size()));
        inodes += n.data;
        return w;
    };

    std::function<Written(const Node&)> write_dir = [&](const Node& n) -> Written {
        std::vector<std::pair<std::string, Written>> kids;
        for (const auto& [name, child] : n.children) {
            switch (child.kind) {
                case Node::Dir: kids.emplace_back(name, write_dir(child)); break;
                case Node::File: kids.emplace_back(name, write_file(child)); break;
                case Node::Link: kids.emplace_back(name, write_link(child)); break;
            }
        }
        const std::size_t listing_pos = dirs.size();
        std::size_t i = 0;
        while (i < kids.size()) {
            const auto block = kids[i].second.ref >> 16;
            std::size_t j = i;
            while (j < kids.size() && (kids[j].second.ref >> 16) == block && j - i < 256) ++j;
            put32(dirs, static_cast<std::uint32_t>(j - i - 1));
            put32(dirs, static_cast<std::uint32_t>(block));
            const auto base = kids[i].second.number;
            put32(dirs, base);
            for (std::size_t k = i; k < j; ++k) {
                const auto& [name, w] = kids[k];
                put16(dirs, static_cast<std::uint16_t>(w.ref & 0xFFFF));
                put16(dirs, static_cast<std::uint16_t>(static_cast<std::int16_t>(w.number - base)));
                put16(dirs, w.type);
                put16(dirs, static_cast<std::uint16_t>(name.size() - 1));
                dirs += name;
            }
            i = j;
        }
        const std::size_t listing = dirs.size() - listing_pos;
        auto w = inode_header(1, n.mode);
        put32(inodes, static_cast<std::uint32_t>(meta_block(listing_pos)));
        put32(inodes, 2);
        put16(inodes, static_cast<std::uint16_t>(listing + 3));
        put16(inodes, static_cast<std::uint16_t>(listing_pos % kMeta));
        put32(inodes, 0);
        return w;
    };

    const auto root = write_dir(root_);
    flush_frag();

    const std::uint64_t inode_table = image.size();
    emit_meta(image, inodes);
    const std::uint64_t dir_table = image.size();
    emit_meta(image, dirs);

    std::string frag_entries;
    for (const auto& f : frags) {
        put64(frag_entries, f.start);
        put32(frag_entries, f.size);
        put32(frag_entries, 0);
    }
    std::vector<std::uint64_t> frag_blocks;
    emit_meta(image, frag_entries, &frag_blocks);
    const std::uint64_t frag_table = image.size();
    for (auto b : frag_blocks) put64(image, b);

    std::string ids;
    put32(ids, 0);
    std::vector<std::uint64_t> id_blocks;
    emit_meta(image, ids, &id_blocks);
    const std::uint64_t id_table = image.size();
    put64(image, id_blocks.front());

    const std::uint64_t bytes_used = image.size();
    image.replace(0, 4, "hsqs");
    set32(image, 4, next_number - 1);
    set32(image, 8, 0);
    set32(image, 12, kBlock);
    set32(image, 16, static_cast<std::uint32_t>(frags.size()));
    set16(image, 20, compressor_);
    set16(image, 22, 12);
    set16(image, 24, 0x0003);  // uncompressed inodes and directories
    set16(image, 26, 1);
    set16(image, 28, 4);
    set16(image, 30, 0);
    set64(image, 32, root.ref);
    set64(image, 40, bytes_used);
    set64(image, 48, id_table);
    set64(image, 56, ~0ull);
    set64(image, 64, inode_table);
    set64(image, 72, dir_table);
    set64(image, 80, frag_table);
    set64(image, 88, ~0ull);
    pad_to(image, 4096);
    return image;
}

std::string random_bytes(std::mt19937_64& rng, std::size_t n) {
    std::string out(n, '\0');
    for (std::size_t i = 0; i < n; i += 8) {
        auto v = rng();
        for (std::size_t k = 0; k < 8 && i + k < n; ++k) out[i + k] = static_cast<char>(v >> (8 * k));
    }
    return out;
}

}  // namespace testsupport
