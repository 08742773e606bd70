#include "internal.hpp"

#include <map>
#include <set>

namespace unibom::firmware::detail {

namespace {

constexpr std::uint16_t kGzipCompressor = 1;
constexpr std::uint32_t kNoFragment = 0xFFFFFFFF;
constexpr std::uint32_t kUncompressedData = 1u << 24;
constexpr int kMaxDirDepth = 128;

struct Super {
    std::uint32_t inode_count, block_size, frag_count;
    std::uint16_t compressor;
    std::uint64_t root_inode, bytes_used, inode_table, dir_table, frag_table;
};

Super read_super(std::string_view d) {
    Super s{};
    s.inode_count = le32(d, 4);
    s.block_size = le32(d, 12);
    s.frag_count = le32(d, 16);
    s.compressor = le16(d, 20);
    s.root_inode = le64(d, 32);
    s.bytes_used = le64(d, 40);
    s.inode_table = le64(d, 64);
    s.dir_table = le64(d, 72);
    s.frag_table = le64(d, 80);
    return s;
}

struct Cursor {
    std::uint64_t block;  // absolute position of the metadata block header
    std::size_t offset;   // within the uncompressed block
};

class Reader {
public:
    Reader(std::string_view image, const Super& sb, OutputTree& out)
        : d_(image.substr(0, sb.bytes_used)), sb_(sb), out_(out) {}

    void extract() {
        auto root = inode_cursor(sb_.root_inode);
        auto type = le16(peek(root, 2), 0);
        if (type != 1 && type != 8) throw CarveError("squashfs: root inode is not a directory");
        walk_dir(root, "", 0);
    }

private:
    struct Block {
        std::string data;
        std::uint64_t next;
    };

    const Block& block(std::uint64_t pos) {
        if (auto it = cache_.find(pos); it != cache_.end()) return it->second;
        const auto hdr = le16(d_, pos);
        const std::size_t size = hdr & 0x7FFF;
        if (pos + 2 + size > d_.size()) throw CarveError("squashfs: metadata block past end");
        auto raw = d_.substr(pos + 2, size);
        Block b{(hdr & 0x8000) ? std::string(raw) : zlib_inflate(raw, 8192), pos + 2 + size};
        return cache_.emplace(pos, std::move(b)).first->second;
    }

    std::string read(Cursor& c, std::size_t n) {
        std::string out;
        while (n > 0) {
            const auto& b = block(c.block);
            if (c.offset >= b.data.size()) {
                if (b.data.empty()) throw CarveError("squashfs: empty metadata block");
                c.offset -= b.data.size();
                c.block = b.next;
                continue;
            }
            const auto take = std::min(n, b.data.size() - c.offset);
            out.append(b.data, c.offset, take);
            c.offset += take;
            n -= take;
        }
        return out;
    }

    std::string peek(Cursor c, std::size_t n) { return read(c, n); }

    Cursor inode_cursor(std::uint64_t ref) const {
        return {sb_.inode_table + (ref >> 16), static_cast<std::size_t>(ref & 0xFFFF)};
    }

    void walk_dir(Cursor inode, const std::string& path, int depth) {
        if (depth > kMaxDirDepth) throw CarveError("squashfs: directory nesting too deep");
        const auto key = inode.block << 16 | inode.offset;
        if (!visited_.insert(key).second) throw CarveError("squashfs: directory cycle");

        const auto hdr = read(inode, 16);
        const auto type = le16(hdr, 0);
        std::uint32_t start_block, listing_size;
        std::uint16_t block_offset;
        if (type == 1) {
            const auto b = read(inode, 16);
            start_block = le32(b, 0);
            listing_size = le16(b, 8);
            block_offset = le16(b, 10);
        } else {
            const auto b = read(inode, 24);
            listing_size = le32(b, 4);
            start_block = le32(b, 8);
            block_offset = le16(b, 18);
        }
        if (!path.empty()) out_.make_dir(path);
        if (listing_size <= 3) return;

        Cursor dir{sb_.dir_table + start_block, block_offset};
        std::size_t remaining = listing_size - 3;
        while (remaining > 0) {
            if (remaining < 12) throw CarveError("squashfs: short directory header");
            const auto h = read(dir, 12);
            remaining -= 12;
            const std::uint32_t count = le32(h, 0) + 1;
            const std::uint32_t inode_block = le32(h, 4);
            if (count > 256) throw CarveError("squashfs: bad directory header");
            for (std::uint32_t i = 0; i < count; ++i) {
                if (remaining < 8) throw CarveError("squashfs: short directory entry");
                const auto e = read(dir, 8);
                const std::size_t name_size = le16(e, 6) + 1u;
                if (remaining < 8 + name_size) throw CarveError("squashfs: short directory entry");
                const auto name = read(dir, name_size);
                remaining -= 8 + name_size;
                if (name == "." || name == ".." || name.find('/') != std::string::npos ||
                    name.find('\0') != std::string::npos) {
                    out_.warn("squashfs: refused entry name '" + name + "'");
                    continue;
                }
                Cursor child{sb_.inode_table + inode_block, le16(e, 0)};
                entry(child, path.empty() ? name : path + "/" + name, depth);
            }
        }
    }

    void entry(Cursor inode, const std::string& path, int depth) {
        const auto hdr = peek(inode, 16);
        const auto type = le16(hdr, 0);
        const bool exec = (le16(hdr, 2) & 0111) != 0;
        switch (type) {
            case 1: case 8: walk_dir(inode, path, depth + 1); break;
            case 2: case 9: file(inode, type, path, exec); break;
            case 3: case 10: {
                read(inode, 16);
                const auto b = read(inode, 8);
                const auto size = le32(b, 4);
                if (size > 4096) throw CarveError("squashfs: oversized symlink");
                out_.write_link(path, read(inode, size));
                break;
            }
            case 4: case 5: case 6: case 7:
            case 11: case 12: case 13: case 14: break;
            default: throw CarveError("squashfs: unknown inode type " + std::to_string(type));
        }
    }

    void file(Cursor inode, std::uint16_t type, const std::string& path, bool exec) {
        read(inode, 16);
        std::uint64_t blocks_start, file_size;
        std::uint32_t frag, frag_offset;
        if (type == 2) {
            const auto b = read(inode, 16);
            blocks_start = le32(b, 0);
            frag = le32(b, 4);
            frag_offset = le32(b, 8);
            file_size = le32(b, 12);
        } else {
            const auto b = read(inode, 40);
            blocks_start = le64(b, 0);
            file_size = le64(b, 8);
            frag = le32(b, 28);
            frag_offset = le32(b, 32);
        }
        if (file_size > out_.remaining()) out_.charge(file_size);  // throws

        const std::uint64_t bs = sb_.block_size;
        const std::uint64_t nblocks = frag == kNoFragment ? (file_size + bs - 1) / bs : file_size / bs;
        const auto sizes = read(inode, nblocks * 4);

        std::string content;
        content.reserve(file_size);
        std::uint64_t pos = blocks_start;
        for (std::uint64_t i = 0; i < nblocks; ++i) {
            const auto raw = le32(sizes, i * 4);
            const std::uint64_t want = std::min(bs, file_size - content.size());
            const std::uint32_t size = raw & ~kUncompressedData;
            if (size == 0) {
                content.append(want, '\0');
                continue;
            }
            if (pos + size > d_.size()) throw CarveError("squashfs: data block past end");
            auto chunk = d_.substr(pos, size);
            pos += size;
            auto plain = (raw & kUncompressedData) ? std::string(chunk) : zlib_inflate(chunk, bs);
            if (plain.size() < want) throw CarveError("squashfs: short data block");
            content.append(plain, 0, want);
        }
        if (frag != kNoFragment) {
            const auto& f = fragment(frag);
            if (frag_offset > f.size() || f.size() - frag_offset < file_size - content.size()) {
                throw CarveError("squashfs: fragment out of range");
            }
            content.append(f, frag_offset, file_size - content.size());
        }
        out_.write_file(path, content, exec);
    }

    const std::string& fragment(std::uint32_t index) {
        if (auto it = fragments_.find(index); it != fragments_.end()) return it->second;
        if (index >= sb_.frag_count) throw CarveError("squashfs: fragment index out of range");
        const auto table_block = le64(d_, sb_.frag_table + (index / 512) * 8);
        Cursor c{table_block, (index % 512) * 16u};
        const auto e = read(c, 16);
        const auto start = le64(e, 0);
        const auto raw = le32(e, 8);
        const std::uint32_t size = raw & ~kUncompressedData;
        if (start + size > d_.size()) throw CarveError("squashfs: fragment block past end");
        auto chunk = d_.substr(start, size);
        auto plain = (raw & kUncompressedData) ? std::string(chunk) : zlib_inflate(chunk, sb_.block_size);
        return fragments_.emplace(index, std::move(plain)).first->second;
    }

    std::string_view d_;
    Super sb_;
    OutputTree& out_;
    std::map<std::uint64_t, Block> cache_;
    std::map<std::uint32_t, std::string> fragments_;
    std::set<std::uint64_t> visited_;
};

}  // namespace

bool squashfs_header_ok(std::string_view d) {
    if (d.size() < 96 || d.substr(0, 4) != "hsqs") return false;
    const auto bs = le32(d, 12);
    const auto log = le16(d, 22);
    if (le16(d, 28) != 4 || le16(d, 30) != 0) return false;
    if (log < 12 || log > 20 || bs != (1u << log)) return false;
    return le64(d, 40) >= 96;
}

CarveOutcome carve_squashfs(std::string_view data, OutputTree& out) {
    if (!squashfs_header_ok(data)) throw CarveError("bad squashfs superblock");
    const auto sb = read_super(data);
    if (sb.bytes_used > data.size()) throw CarveError("squashfs: image truncated");
    if (sb.compressor != kGzipCompressor) {
        out.warn("squashfs: compressor id " + std::to_string(sb.compressor) + " not supported");
        return {sb.bytes_used, CarveStatus::DetectedOnly};
    }
    Reader(data, sb, out).extract();
    return {sb.bytes_used, CarveStatus::Unpacked};
}

}  // namespace unibom::firmware::detail
