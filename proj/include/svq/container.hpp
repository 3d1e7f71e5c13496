#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svq/lqcodec.hpp"
#include "svq/transform.hpp"

namespace svq {

enum class ContainerMode : uint8_t { image = 0, video = 1 };
enum class FrameKind : uint8_t { full = 0, delta = 1 };

struct CodebookRef {
    std::string id;
    uint32_t n_k = 0;
    uint32_t content_hash = 0; // codebook_content_hash of the encoder's book
};

// One codebook's index payload for one frame. Full frames carry a complete
// rank stream; delta frames carry changed positions (raw u32, strictly
// increasing) plus a rank stream holding only the new ranks.
struct IndexStreamRecord {
    std::vector<uint32_t> delta_positions; // empty for full frames
    std::vector<uint8_t> rank_stream;      // write_rank_stream bytes; empty when m == 0
    uint64_t bits = 0;                     // accounted cost, see FORMAT.md
};

struct FrameRecord {
    FrameKind kind = FrameKind::full;
    std::vector<IndexStreamRecord> books; // one per codebook, in bank order
    LqPayload lq;
};

// The serialized bitstream. Byte layout documented in FORMAT.md; containers
// are immutable after read.
struct Container {
    uint16_t version = 1;
    ContainerMode mode = ContainerMode::image;
    uint32_t width = 0;
    uint32_t height = 0;
    uint32_t channels = 1;
    uint32_t block_size = 8; // transform p
    TransformBasis basis = TransformBasis::dct;
    double alpha = 1.0;
    double tau = 1.0;
    double frame_rate = 0.0; // video metadata; 0 = unspecified
    std::vector<CodebookRef> books;
    std::vector<FrameRecord> frames;

    uint32_t grid_w() const { return (width + block_size - 1) / block_size; }
    uint32_t grid_h() const { return (height + block_size - 1) / block_size; }
    size_t grid_cells() const { return static_cast<size_t>(grid_w()) * grid_h(); }
};

void validate_container(const Container& c);

std::vector<uint8_t> serialize_container(const Container& c);
Container parse_container(std::span<const uint8_t> bytes, const std::string& name = "container");

// Byte-exact round trip; read verifies per-stream CRCs (errors name the
// offending stream) and the file-level CRC trailer.
void write_container(const Container& c, const std::string& path);
Container read_container(const std::string& path);

struct RateReport {
    double index_bits = 0; // b_c
    double lq_bits = 0;    // b_LQ
    double total_bits = 0; // B = b_c + b_LQ
    double bpp = 0;        // B / (h*w)
};

// Image: b_c = sum_k coded bits of Z_k. Video: b_c and b_LQ are per-frame
// time averages (full frame cost plus delta costs, divided by T). bpp
// divides by h*w regardless of channel count.
RateReport rate_report(const Container& c);

} // namespace svq
