#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "svq/errors.hpp"

namespace svq {

// CRC-32 (IEEE 802.3, as used by zip/png). Implemented in bytes.cpp on top
// of zlib.
uint32_t crc32_ieee(std::span<const uint8_t> data, uint32_t seed = 0);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const uint8_t> data);

// Little-endian append-only byte sink.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) { append_le(v, 2); }
    void u32(uint32_t v) { append_le(v, 4); }
    void u64(uint64_t v) { append_le(v, 8); }
    void i32(int32_t v) { append_le(static_cast<uint32_t>(v), 4); }
    void f64(double v) { append_le(std::bit_cast<uint64_t>(v), 8); }
    void bytes(std::span<const uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void str(const std::string& s) {
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    size_t size() const { return buf_.size(); }
    std::span<const uint8_t> view() const { return buf_; }
    std::span<const uint8_t> view_from(size_t offset) const {
        return std::span<const uint8_t>(buf_).subspan(offset);
    }
    std::vector<uint8_t> take() { return std::move(buf_); }

private:
    void append_le(uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    std::vector<uint8_t> buf_;
};

// Little-endian bounds-checked byte source. Every read is validated so that
// corrupt input surfaces as DataError, never as out-of-bounds access.
class ByteReader {
public:
    ByteReader(std::span<const uint8_t> data, std::string stream_name = "stream")
        : data_(data), name_(std::move(stream_name)) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() { return static_cast<uint16_t>(read_le(2)); }
    uint32_t u32() { return static_cast<uint32_t>(read_le(4)); }
    uint64_t u64() { return read_le(8); }
    int32_t i32() { return static_cast<int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(read_le(8)); }

    std::span<const uint8_t> bytes(size_t n) { return take(n); }

    std::string str(size_t n) {
        auto b = take(n);
        return std::string(b.begin(), b.end());
    }

    size_t pos() const { return pos_; }
    size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ == data_.size(); }
    std::span<const uint8_t> viewed(size_t from, size_t to) const {
        return data_.subspan(from, to - from);
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw DataError(name_ + ": " + what + " (byte offset " + std::to_string(pos_) + ")");
    }

private:
    std::span<const uint8_t> take(size_t n) {
        if (n > remaining()) fail("unexpected end of data");
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    uint64_t read_le(int n) {
        auto b = take(static_cast<size_t>(n));
        uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
        return v;
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
    std::string name_;
};

} // namespace svq
