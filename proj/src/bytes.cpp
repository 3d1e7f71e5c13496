#include "svq/bytes.hpp"

#include <cstdio>
#include <zlib.h>

namespace svq {

uint32_t crc32_ieee(std::span<const uint8_t> data, uint32_t seed) {
    uLong c = crc32(seed, nullptr, 0);
    // zlib takes uInt lengths; feed in chunks so >4GB inputs stay correct.
    size_t off = 0;
    while (off < data.size()) {
        uInt chunk = static_cast<uInt>(std::min<size_t>(data.size() - off, 1u << 30));
        c = crc32(c, data.data() + off, chunk);
        off += chunk;
    }
    return static_cast<uint32_t>(c);
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    std::fseek(f, 0, SEEK_END);
    long len = std::ftell(f);
    if (len < 0) {
        std::fclose(f);
        throw IoError("cannot determine size of '" + path + "'");
    }
    std::fseek(f, 0, SEEK_SET);
    std::vector<uint8_t> out(static_cast<size_t>(len));
    size_t got = out.empty() ? 0 : std::fread(out.data(), 1, out.size(), f);
    std::fclose(f);
    if (got != out.size()) throw IoError("short read from '" + path + "'");
    return out;
}

void write_file_bytes(const std::string& path, std::span<const uint8_t> data) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    size_t put = data.empty() ? 0 : std::fwrite(data.data(), 1, data.size(), f);
    int rc = std::fclose(f);
    if (put != data.size() || rc != 0) throw IoError("short write to '" + path + "'");
}

} // namespace svq
