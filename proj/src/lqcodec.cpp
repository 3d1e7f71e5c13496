#include "svq/lqcodec.hpp"

#include <algorithm>
#include <cmath>

#include "svq/bytes.hpp"
#include "svq/entropy.hpp"
#include "svq/errors.hpp"
#include "svq/transform.hpp"

namespace svq {

namespace {

constexpr uint32_t kLqBlock = 8;
constexpr double kMinQuantStep = 1e-12;
constexpr double kMaxQuantStep = 1e12;

// Zigzag scan order over a p x p coefficient block (JPEG-style traversal of
// anti-diagonals, alternating direction).
std::vector<uint32_t> zigzag_scan(uint32_t p) {
    std::vector<uint32_t> order;
    order.reserve(static_cast<size_t>(p) * p);
    for (uint32_t s = 0; s <= 2 * (p - 1); ++s) {
        if (s % 2 == 0) { // up-right
            uint32_t y = std::min(s, p - 1);
            uint32_t x = s - y;
            for (;; --y, ++x) {
                order.push_back(y * p + x);
                if (y == 0 || x == p - 1) break;
            }
        } else { // down-left
            uint32_t x = std::min(s, p - 1);
            uint32_t y = s - x;
            for (;; ++y, --x) {
                order.push_back(y * p + x);
                if (x == 0 || y == p - 1) break;
            }
        }
    }
    return order;
}

// Smallest shift so that the coarse symbols both span at most 4096 values
// and stay well inside int32.
uint32_t pick_fine_bits(int64_t mn, int64_t mx) {
    uint32_t k = 0;
    while (k < 40) {
        int64_t cmn = mn >> k;
        int64_t cmx = mx >> k;
        if (cmx - cmn + 1 <= 4096 && cmx <= (int64_t(1) << 30) && cmn >= -(int64_t(1) << 30))
            return k;
        ++k;
    }
    throw Error("lq_encode: coefficient range too large"); // unreachable with validated q
}

} // namespace

void validate_lq_quality(const LqQuality& quality) {
    if (quality.downsample != 1 && quality.downsample != 2 && quality.downsample != 4)
        throw Error("lq downsample factor must be 1, 2 or 4");
    if (!(quality.quant_step >= kMinQuantStep && quality.quant_step <= kMaxQuantStep))
        throw Error("lq quantization step must be in [1e-12, 1e12]");
}

LqPayload lq_encode(const Image& img, const LqQuality& quality) {
    validate_image(img);
    validate_lq_quality(quality);

    const uint32_t s = quality.downsample;
    const double q = quality.quant_step;
    uint32_t down_w = (img.width + s - 1) / s;
    uint32_t down_h = (img.height + s - 1) / s;
    Image small = (s == 1) ? img : bicubic_resample(img, down_w, down_h);

    TransformSpec spec{kLqBlock, img.channels, TransformBasis::dct};
    LatentGrid lat = analyze(small, spec);

    // Quantize all coefficients, block by block in zigzag scan order.
    const std::vector<uint32_t> scan = zigzag_scan(kLqBlock);
    const uint32_t per_chan = kLqBlock * kLqBlock;
    std::vector<int64_t> syms;
    syms.reserve(lat.data.size());
    for (size_t l = 0; l < lat.cells(); ++l) {
        const double* cell = lat.cell(l);
        for (uint32_t ch = 0; ch < img.channels; ++ch)
            for (uint32_t i = 0; i < per_chan; ++i)
                syms.push_back(std::llround(cell[ch * per_chan + scan[i]] / q));
    }

    auto [mn_it, mx_it] = std::minmax_element(syms.begin(), syms.end());
    uint32_t fine_k = pick_fine_bits(*mn_it, *mx_it);

    std::vector<int32_t> coarse(syms.size());
    std::vector<uint32_t> fine(syms.size());
    uint64_t fine_mask = (fine_k == 0) ? 0 : ((uint64_t(1) << fine_k) - 1);
    for (size_t i = 0; i < syms.size(); ++i) {
        coarse[i] = static_cast<int32_t>(syms[i] >> fine_k);
        fine[i] = static_cast<uint32_t>(static_cast<uint64_t>(syms[i]) & fine_mask);
    }

    ByteWriter w;
    w.u8(static_cast<uint8_t>(s));
    w.f64(q);
    w.u32(down_w);
    w.u32(down_h);
    w.u8(static_cast<uint8_t>(img.channels));
    w.u8(static_cast<uint8_t>(fine_k));
    write_symbol_stream(w, coarse, 2);
    if (fine_k > 0) {
        uint64_t acc = 0;
        uint32_t used = 0;
        for (uint32_t f : fine) {
            acc |= static_cast<uint64_t>(f) << used;
            used += fine_k;
            while (used >= 8) {
                w.u8(static_cast<uint8_t>(acc));
                acc >>= 8;
                used -= 8;
            }
        }
        if (used > 0) w.u8(static_cast<uint8_t>(acc));
    }

    LqPayload payload;
    payload.kind = LqKind::builtin;
    payload.bytes = w.take();
    payload.bit_count = 8 * payload.bytes.size();
    return payload;
}

Image lq_decode(const LqPayload& payload, uint32_t out_w, uint32_t out_h) {
    if (out_w == 0 || out_h == 0) throw Error("lq_decode: target dimensions must be >= 1");

    if (payload.kind == LqKind::external) {
        Image img = load_image(payload.external_path);
        return bicubic_resample(img, out_w, out_h);
    }

    ByteReader r(payload.bytes, "lq payload");
    uint8_t s = r.u8();
    if (s != 1 && s != 2 && s != 4) r.fail("bad downsample factor");
    double q = r.f64();
    if (!(q >= kMinQuantStep && q <= kMaxQuantStep)) r.fail("bad quantization step");
    uint32_t down_w = r.u32();
    uint32_t down_h = r.u32();
    uint8_t channels = r.u8();
    if (channels != 1 && channels != 3) r.fail("bad channel count");
    if (down_w == 0 || down_h == 0 || static_cast<uint64_t>(down_w) * down_h > (1ull << 26))
        r.fail("bad downsampled dimensions");
    uint8_t fine_k = r.u8();
    if (fine_k > 40) r.fail("bad fine bit width");

    TransformSpec spec{kLqBlock, channels, TransformBasis::dct};
    LatentGrid lat(spec.grid_w(down_w), spec.grid_h(down_h), spec.latent_dim());
    size_t count = lat.cells() * lat.d;

    std::vector<int32_t> coarse = read_symbol_stream(r, "lq coefficients", count);
    std::vector<uint32_t> fine(count, 0);
    if (fine_k > 0) {
        size_t nbytes = (count * fine_k + 7) / 8;
        if (r.remaining() < nbytes) r.fail("truncated fine bits");
        auto bytes = r.bytes(nbytes);
        uint64_t acc = 0;
        uint32_t avail = 0;
        size_t next = 0;
        uint64_t mask = (uint64_t(1) << fine_k) - 1;
        for (size_t i = 0; i < count; ++i) {
            while (avail < fine_k) {
                acc |= static_cast<uint64_t>(bytes[next++]) << avail;
                avail += 8;
            }
            fine[i] = static_cast<uint32_t>(acc & mask);
            acc >>= fine_k;
            avail -= fine_k;
        }
    }
    if (!r.at_end()) r.fail("trailing bytes after lq payload");

    const std::vector<uint32_t> scan = zigzag_scan(kLqBlock);
    const uint32_t per_chan = kLqBlock * kLqBlock;
    size_t sym = 0;
    for (size_t l = 0; l < lat.cells(); ++l) {
        double* cell = lat.cell(l);
        for (uint32_t ch = 0; ch < channels; ++ch)
            for (uint32_t i = 0; i < per_chan; ++i, ++sym) {
                int64_t value = (static_cast<int64_t>(coarse[sym]) << fine_k) |
                                static_cast<int64_t>(fine[sym]);
                cell[ch * per_chan + scan[i]] = static_cast<double>(value) * q;
            }
    }

    Image small = synthesize(lat, spec, down_w, down_h);
    if (small.width == out_w && small.height == out_h) return small;
    return bicubic_resample(small, out_w, out_h);
}

LqPayload import_external_lq(const std::string& path, uint64_t bit_count) {
    load_image(path); // validate that the reference resolves to a loadable image
    LqPayload payload;
    payload.kind = LqKind::external;
    payload.bit_count = bit_count;
    payload.external_path = path;
    return payload;
}

} // namespace svq
