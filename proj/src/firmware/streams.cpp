#include "internal.hpp"

#include <lzma.h>
#include <zlib.h>

#include <algorithm>
#include <fstream>

namespace unibom::firmware::detail {

namespace {

constexpr std::size_t kChunk = 256 * 1024;
constexpr std::size_t kMaxFeed = 1u << 30;

std::string gzip_member_name(std::string_view data) {
    const auto flags = static_cast<unsigned char>(data[3]);
    std::size_t pos = 10;
    if (flags & 0x04) pos += 2 + le16(data, 10);  // FEXTRA
    if (!(flags & 0x08) || pos >= data.size()) return "gzip.uncompressed";
    auto end = data.find('\0', pos);
    if (end == std::string_view::npos) return "gzip.uncompressed";
    std::string name(data.substr(pos, end - pos));
    if (auto slash = name.find_last_of("/\\"); slash != std::string::npos) name.erase(0, slash + 1);
    if (name.empty() || name == "." || name == "..") return "gzip.uncompressed";
    return name;
}

class FileSink {
public:
    FileSink(OutputTree& out, const std::string& name) : out_(out) {
        std::error_code ec;
        fs::create_directories(out.root(), ec);
        path_ = out.root() / name;
        file_.open(path_, std::ios::binary | std::ios::trunc);
        if (!file_) throw CarveError("cannot write " + path_.string());
    }
    void put(const char* p, std::size_t n) {
        if (n == 0) return;
        out_.charge(n);
        file_.write(p, static_cast<std::streamsize>(n));
    }

private:
    OutputTree& out_;
    fs::path path_;
    std::ofstream file_;
};

}  // namespace

bool gzip_header_ok(std::string_view d) {
    return d.size() >= 18 && static_cast<unsigned char>(d[0]) == 0x1f &&
           static_cast<unsigned char>(d[1]) == 0x8b && d[2] == 0x08 &&
           (static_cast<unsigned char>(d[3]) & 0xE0) == 0;
}

bool xz_header_ok(std::string_view d) {
    if (d.size() < 12 || d.substr(0, 6) != std::string_view("\xFD" "7zXZ\0", 6)) return false;
    const auto flags0 = static_cast<unsigned char>(d[6]);
    const auto flags1 = static_cast<unsigned char>(d[7]);
    if (flags0 != 0 || (flags1 & 0xF0) != 0) return false;
    const auto crc = crc32(0, reinterpret_cast<const Bytef*>(d.data() + 6), 2);
    return crc == le32(d, 8);
}

CarveOutcome carve_gzip(std::string_view data, OutputTree& out) {
    if (!gzip_header_ok(data)) throw CarveError("bad gzip header");
    FileSink sink(out, gzip_member_name(data));

    z_stream s{};
    if (inflateInit2(&s, 16 + MAX_WBITS) != Z_OK) throw CarveError("zlib init failed");
    std::string buf(kChunk, '\0');
    std::size_t fed = 0;
    int rc = Z_OK;
    try {
        while (rc != Z_STREAM_END) {
            if (s.avail_in == 0) {
                if (fed == data.size()) throw CarveError("truncated gzip stream");
                const auto n = std::min(kMaxFeed, data.size() - fed);
                s.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data() + fed));
                s.avail_in = static_cast<uInt>(n);
                fed += n;
            }
            s.next_out = reinterpret_cast<Bytef*>(buf.data());
            s.avail_out = static_cast<uInt>(buf.size());
            rc = inflate(&s, Z_NO_FLUSH);
            if (rc != Z_OK && rc != Z_STREAM_END && rc != Z_BUF_ERROR) {
                throw CarveError(std::string("gzip: ") + (s.msg ? s.msg : "inflate error"));
            }
            sink.put(buf.data(), buf.size() - s.avail_out);
        }
    } catch (...) {
        inflateEnd(&s);
        throw;
    }
    CarveOutcome o{s.total_in, CarveStatus::Unpacked};
    inflateEnd(&s);
    return o;
}

CarveOutcome carve_xz(std::string_view data, OutputTree& out) {
    if (!xz_header_ok(data)) throw CarveError("bad xz header");
    FileSink sink(out, "xz.uncompressed");

    lzma_stream s = LZMA_STREAM_INIT;
    if (lzma_stream_decoder(&s, UINT64_MAX, 0) != LZMA_OK) throw CarveError("lzma init failed");
    std::string buf(kChunk, '\0');
    s.next_in = reinterpret_cast<const uint8_t*>(data.data());
    s.avail_in = data.size();
    lzma_ret rc = LZMA_OK;
    try {
        while (rc != LZMA_STREAM_END) {
            s.next_out = reinterpret_cast<uint8_t*>(buf.data());
            s.avail_out = buf.size();
            rc = lzma_code(&s, LZMA_FINISH);
            if (rc != LZMA_OK && rc != LZMA_STREAM_END) {
                throw CarveError(rc == LZMA_BUF_ERROR ? "truncated xz stream" : "xz: corrupt data");
            }
            sink.put(buf.data(), buf.size() - s.avail_out);
        }
    } catch (...) {
        lzma_end(&s);
        throw;
    }
    CarveOutcome o{s.total_in, CarveStatus::Unpacked};
    lzma_end(&s);
    return o;
}

std::string zlib_inflate(std::string_view in, std::size_t expected_max) {
    z_stream s{};
    if (inflateInit(&s) != Z_OK) throw CarveError("zlib init failed");
    std::string outbuf(expected_max, '\0');
    s.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
    s.avail_in = static_cast<uInt>(in.size());
    s.next_out = reinterpret_cast<Bytef*>(outbuf.data());
    s.avail_out = static_cast<uInt>(outbuf.size());
    const int rc = inflate(&s, Z_FINISH);
    const auto produced = s.total_out;
    inflateEnd(&s);
    if (rc != Z_STREAM_END) throw CarveError("squashfs: bad compressed block");
    outbuf.resize(produced);
    return outbuf;
}

}  // namespace unibom::firmware::detail
