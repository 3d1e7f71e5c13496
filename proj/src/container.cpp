#include "svq/container.hpp"

#include <algorithm>
#include <cmath>

#include "svq/bytes.hpp"
#include "svq/entropy.hpp"
#include "svq/errors.hpp"

namespace svq {

namespace {

constexpr char kMagic[4] = {'S', 'V', 'Q', '1'};
constexpr uint16_t kVersion = 1;
constexpr uint64_t kMaxPixels = 1ull << 26;
constexpr uint32_t kMaxBooks = 1024;
constexpr uint32_t kMaxFrames = 1u << 20;

uint64_t index_stream_bits(const IndexStreamRecord& rec, FrameKind kind) {
    if (kind == FrameKind::full) return 8 * rec.rank_stream.size();
    return 32ull * rec.delta_positions.size() + 8 * rec.rank_stream.size();
}

std::string stream_label(const char* what, size_t frame, size_t book) {
    return std::string(what) + " (frame " + std::to_string(frame) + ", book " +
           std::to_string(book) + ")";
}

} // namespace

void validate_container(const Container& c) {
    if (c.width == 0 || c.height == 0)
        throw DataError("container: zero dimensions");
    if (static_cast<uint64_t>(c.width) * c.height > kMaxPixels)
        throw DataError("container: image dimensions too large");
    if (c.channels != 1 && c.channels != 3)
        throw DataError("container: channels must be 1 or 3");
    if (c.block_size == 0 || c.block_size > 4096)
        throw DataError("container: bad transform block size");
    if (c.basis != TransformBasis::dct)
        throw DataError("container: unknown transform basis");
    if (!(c.alpha >= 0.0 && c.alpha <= 1.0))
        throw DataError("container: alpha out of [0,1]");
    if (!(c.tau > 0.0) || !std::isfinite(c.tau))
        throw DataError("container: tau must be positive");
    if (!std::isfinite(c.frame_rate) || c.frame_rate < 0.0)
        throw DataError("container: bad frame rate");
    if (c.books.empty() || c.books.size() > kMaxBooks)
        throw DataError("container: codebook count out of range");
    for (const CodebookRef& b : c.books)
        if (b.n_k == 0) throw DataError("container: codebook with zero codewords");
    if (c.frames.empty() || c.frames.size() > kMaxFrames)
        throw DataError("container: frame count out of range");
    if ((c.mode == ContainerMode::image) != (c.frames.size() == 1))
        throw DataError("container: frame count inconsistent with mode");
    if (!c.frames.empty() && c.frames.front().kind != FrameKind::full)
        throw DataError("container: first frame must be full");

    const uint64_t cells = c.grid_cells();
    for (size_t t = 0; t < c.frames.size(); ++t) {
        const FrameRecord& f = c.frames[t];
        if (f.books.size() != c.books.size())
            throw DataError("container: frame " + std::to_string(t) +
                            " has wrong per-book record count");
        for (size_t k = 0; k < f.books.size(); ++k) {
            const IndexStreamRecord& rec = f.books[k];
            if (f.kind == FrameKind::full) {
                if (!rec.delta_positions.empty())
                    throw DataError(stream_label("index stream", t, k) +
                                    ": full frame with delta positions");
            } else {
                if (rec.delta_positions.size() > cells)
                    throw DataError(stream_label("index stream", t, k) +
                                    ": more delta positions than grid cells");
                for (size_t i = 0; i < rec.delta_positions.size(); ++i) {
                    if (rec.delta_positions[i] >= cells)
                        throw DataError(stream_label("index stream", t, k) +
                                        ": delta position out of range");
                    if (i > 0 && rec.delta_positions[i] <= rec.delta_positions[i - 1])
                        throw DataError(stream_label("index stream", t, k) +
                                        ": delta positions not strictly increasing");
                }
                if (rec.delta_positions.empty() && !rec.rank_stream.empty())
                    throw DataError(stream_label("index stream", t, k) +
                                    ": empty delta with rank payload");
            }
            if (rec.bits != index_stream_bits(rec, f.kind))
                throw DataError(stream_label("index stream", t, k) +
                                ": recorded bits do not match payload length");
        }
        if (f.lq.kind == LqKind::builtin) {
            if (f.lq.bit_count != 8 * f.lq.bytes.size())
                throw DataError("container: frame " + std::to_string(t) +
                                " lq bit count does not match payload length");
        }
    }
}

std::vector<uint8_t> serialize_container(const Container& c) {
    validate_container(c);
    ByteWriter w;
    w.bytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kMagic), 4));
    w.u16(kVersion);
    w.u8(static_cast<uint8_t>(c.mode));
    w.u32(c.width);
    w.u32(c.height);
    w.u8(static_cast<uint8_t>(c.channels));
    w.u16(static_cast<uint16_t>(c.block_size));
    w.u8(static_cast<uint8_t>(c.basis));
    w.f64(c.alpha);
    w.f64(c.tau);
    w.f64(c.frame_rate);
    w.u16(static_cast<uint16_t>(c.books.size()));
    for (const CodebookRef& b : c.books) {
        if (b.id.size() > 0xFFFF) throw Error("container: codebook id too long");
        w.u16(static_cast<uint16_t>(b.id.size()));
        w.str(b.id);
        w.u32(b.n_k);
        w.u32(b.content_hash);
    }
    w.u32(static_cast<uint32_t>(c.frames.size()));

    for (const FrameRecord& f : c.frames) {
        w.u8(static_cast<uint8_t>(f.kind));
        for (const IndexStreamRecord& rec : f.books) {
            if (f.kind == FrameKind::delta) {
                w.u32(static_cast<uint32_t>(rec.delta_positions.size()));
                for (uint32_t pos : rec.delta_positions) w.u32(pos);
            }
            if (f.kind == FrameKind::full || !rec.delta_positions.empty()) {
                w.u32(static_cast<uint32_t>(rec.rank_stream.size()));
                w.bytes(rec.rank_stream);
            }
            w.u64(rec.bits);
        }
        w.u8(static_cast<uint8_t>(f.lq.kind));
        if (f.lq.kind == LqKind::builtin) {
            w.u32(static_cast<uint32_t>(f.lq.bytes.size()));
            w.bytes(f.lq.bytes);
            w.u32(crc32_ieee(f.lq.bytes));
        } else {
            if (f.lq.external_path.size() > 0xFFFF)
                throw Error("container: external lq path too long");
            w.u16(static_cast<uint16_t>(f.lq.external_path.size()));
            w.str(f.lq.external_path);
            w.u64(f.lq.bit_count);
        }
    }

    w.u32(crc32_ieee(w.view())); // file-level trailer
    return w.take();
}

Container parse_container(std::span<const uint8_t> bytes, const std::string& name) {
    ByteReader r(bytes, name);
    auto magic = r.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic))
        r.fail("bad magic, not an SVQ container");
    Container c;
    c.version = r.u16();
    if (c.version != kVersion) r.fail("unsupported version " + std::to_string(c.version));

    uint8_t mode = r.u8();
    if (mode > 1) r.fail("bad mode");
    c.mode = static_cast<ContainerMode>(mode);
    c.width = r.u32();
    c.height = r.u32();
    c.channels = r.u8();
    c.block_size = r.u16();
    uint8_t basis = r.u8();
    if (basis != 0) r.fail("unknown transform basis");
    c.basis = static_cast<TransformBasis>(basis);
    c.alpha = r.f64();
    c.tau = r.f64();
    c.frame_rate = r.f64();
    if (c.width == 0 || c.height == 0 ||
        static_cast<uint64_t>(c.width) * c.height > kMaxPixels)
        r.fail("bad dimensions");
    if (c.block_size == 0 || c.block_size > 4096) r.fail("bad block size");

    uint16_t nbooks = r.u16();
    if (nbooks == 0 || nbooks > kMaxBooks) r.fail("bad codebook count");
    for (uint16_t k = 0; k < nbooks; ++k) {
        CodebookRef b;
        uint16_t id_len = r.u16();
        b.id = r.str(id_len);
        b.n_k = r.u32();
        b.content_hash = r.u32();
        if (b.n_k == 0 || b.n_k > (1u << 24)) r.fail("bad codeword count");
        c.books.push_back(std::move(b));
    }

    uint32_t nframes = r.u32();
    if (nframes == 0 || nframes > kMaxFrames) r.fail("bad frame count");
    const uint64_t cells = c.grid_cells();

    for (uint32_t t = 0; t < nframes; ++t) {
        FrameRecord f;
        uint8_t kind = r.u8();
        if (kind > 1) r.fail("bad frame kind");
        f.kind = static_cast<FrameKind>(kind);
        for (uint16_t k = 0; k < nbooks; ++k) {
            IndexStreamRecord rec;
            bool has_stream = true;
            if (f.kind == FrameKind::delta) {
                uint32_t m = r.u32();
                if (m > cells) r.fail(stream_label("index stream", t, k) +
                                      ": more delta positions than grid cells");
                rec.delta_positions.resize(m);
                for (uint32_t i = 0; i < m; ++i) rec.delta_positions[i] = r.u32();
                has_stream = m > 0;
            }
            if (has_stream) {
                uint32_t len = r.u32();
                if (len > r.remaining())
                    r.fail(stream_label("index stream", t, k) + ": truncated payload");
                auto payload = r.bytes(len);
                rec.rank_stream.assign(payload.begin(), payload.end());
                verify_rank_stream_checksum(rec.rank_stream,
                                            name + ": " + stream_label("index stream", t, k));
            }
            rec.bits = r.u64();
            f.books.push_back(std::move(rec));
        }
        uint8_t lq_kind = r.u8();
        if (lq_kind > 1) r.fail("bad lq payload kind");
        f.lq.kind = static_cast<LqKind>(lq_kind);
        if (f.lq.kind == LqKind::builtin) {
            uint32_t len = r.u32();
            if (len > r.remaining())
                r.fail("lq payload (frame " + std::to_string(t) + "): truncated");
            auto payload = r.bytes(len);
            f.lq.bytes.assign(payload.begin(), payload.end());
            uint32_t got = r.u32();
            if (got != crc32_ieee(f.lq.bytes))
                throw DataError(name + ": lq payload (frame " + std::to_string(t) +
                                "): checksum mismatch");
            f.lq.bit_count = 8ull * f.lq.bytes.size();
        } else {
            uint16_t path_len = r.u16();
            f.lq.external_path = r.str(path_len);
            f.lq.bit_count = r.u64();
        }
        c.frames.push_back(std::move(f));
    }

    uint32_t file_crc = r.u32();
    if (!r.at_end()) r.fail("trailing bytes after container");
    if (file_crc != crc32_ieee(bytes.first(bytes.size() - 4)))
        throw DataError(name + ": container checksum mismatch");

    validate_container(c);
    return c;
}

void write_container(const Container& c, const std::string& path) {
    auto bytes = serialize_container(c);
    write_file_bytes(path, bytes);
}

Container read_container(const std::string& path) {
    auto bytes = read_file_bytes(path);
    return parse_container(bytes, path);
}

RateReport rate_report(const Container& c) {
    validate_container(c);
    RateReport report;
    double index_total = 0.0;
    double lq_total = 0.0;
    for (const FrameRecord& f : c.frames) {
        for (const IndexStreamRecord& rec : f.books)
            index_total += static_cast<double>(rec.bits);
        lq_total += static_cast<double>(f.lq.bit_count);
    }
    const double T = static_cast<double>(c.frames.size());
    report.index_bits = index_total / T;
    report.lq_bits = lq_total / T;
    report.total_bits = report.index_bits + report.lq_bits;
    report.bpp = report.total_bits /
                 (static_cast<double>(c.height) * static_cast<double>(c.width));
    return report;
}

} // namespace svq
