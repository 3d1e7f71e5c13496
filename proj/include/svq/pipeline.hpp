#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svq/codebook.hpp"
#include "svq/container.hpp"
#include "svq/image.hpp"
#include "svq/lqcodec.hpp"
#include "svq/transform.hpp"

namespace svq {

struct EncodeConfig {
    TransformSpec spec;
    double alpha = 1.0; // control strength recorded in the container
    double tau = 1.0;   // weight-predictor temperature (used when K > 1)
    // Fraction of changed index slots above which a video frame is coded
    // full instead of as a delta.
    double delta_threshold = 0.9;
    // Tiles of at most this many pixels per side are analyzed independently;
    // tile boundaries are block-aligned, so the latents are bit-identical
    // for any limit.
    uint32_t tile_limit = 1080;

    bool use_external_lq = false;
    LqQuality lq_quality;          // builtin LQ path
    std::string external_lq_path;  // image file, or frame directory for video
    uint64_t external_lq_bits = 0; // external stream size in bits (per frame)
};

void validate_encode_config(const EncodeConfig& cfg, const CodebookBank& bank);

// Sparse difference between two rank grids of equal shape.
struct IndexDelta {
    std::vector<uint32_t> positions; // strictly increasing, < u*v
    std::vector<uint32_t> new_ranks; // value of `cur` at each position

    size_t changed() const { return positions.size(); }
};

IndexDelta diff_indices(const IndexGrid& prev, const IndexGrid& cur);
IndexGrid apply_index_delta(const IndexGrid& prev, const IndexDelta& delta);

Container encode_image(const Image& img, const CodebookBank& bank, const EncodeConfig& cfg);
Image decode_image(const Container& c, const CodebookBank& bank,
                   const ThetaParams& theta = {});

Container encode_video(const VideoSequence& video, const CodebookBank& bank,
                       const EncodeConfig& cfg);
VideoSequence decode_video(const Container& c, const CodebookBank& bank,
                           const ThetaParams& theta = {});

// Rank grids recovered from the container's index payloads, frames outer,
// books inner. Needs only the container (rank streams are self-contained),
// so rate/statistics tools work without the codebooks.
std::vector<std::vector<IndexGrid>> decode_rank_grids(const Container& c);

struct UnchangedReport {
    std::vector<double> per_transition; // T-1 fractions in [0,1]
    double mean = 0.0;
};

// Fraction of super-pixel x codebook slots whose rank is identical between
// consecutive frames. Requires at least 2 frames.
UnchangedReport unchanged_fraction(const VideoSequence& video, const CodebookBank& bank,
                                   const EncodeConfig& cfg);
UnchangedReport unchanged_fraction_from_container(const Container& c);

} // namespace svq
