#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svq/image.hpp"

namespace svq {

// Quality knobs for the built-in LQ substitute codec: bicubic downsample
// factor and uniform quantization step for the 8x8 DCT coefficients.
struct LqQuality {
    uint32_t downsample = 2;  // s, one of {1, 2, 4}
    double quant_step = 0.05; // q > 0
};

void validate_lq_quality(const LqQuality& quality);

enum class LqKind : uint8_t { builtin = 0, external = 1 };

struct LqPayload {
    LqKind kind = LqKind::builtin;
    std::vector<uint8_t> bytes; // builtin payload; empty for external
    uint64_t bit_count = 0;     // b_LQ
    std::string external_path;  // decode-side reference for external payloads
};

// Encodes the fidelity-preserving LQ substitute: bicubic downsample by s,
// 8x8 block DCT, uniform quantization round(coef/q), coefficients in zigzag
// scan order through the M=2 mixture coder. b_LQ = 8 * payload bytes.
// Deterministic: identical (img, quality) gives bit-identical payloads.
LqPayload lq_encode(const Image& img, const LqQuality& quality);

// Inverse of lq_encode plus bicubic upsample to (out_w, out_h), clamped.
// External payloads resolve their file and resample it to the target size.
Image lq_decode(const LqPayload& payload, uint32_t out_w, uint32_t out_h);

// Wraps an externally produced LQ image (the file must load); bit_count is
// the external codec's true stream size and is passed through to rate
// accounting unchanged. bit_count 0 is legal (LQ treated as free).
LqPayload import_external_lq(const std::string& path, uint64_t bit_count);

} // namespace svq
