#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "svq/transform.hpp"

namespace svq {

// A table of learned d-dimensional codewords plus their training usage
// counts (the counts drive entropy-coder rank assignment).
struct Codebook {
    std::string id;
    uint32_t n_k = 0;
    uint32_t d = 0;
    std::vector<double> codewords; // n_k * d, codeword-major
    std::vector<uint64_t> freq;    // n_k usage counts

    const double* word(uint32_t i) const { return codewords.data() + static_cast<size_t>(i) * d; }
    double* word(uint32_t i) { return codewords.data() + static_cast<size_t>(i) * d; }
};

void validate_codebook(const Codebook& book);

// CRC-32 over the serialized codewords and frequency counts; stored in
// containers so the decoder can refuse a mismatched codebook.
uint32_t codebook_content_hash(const Codebook& book);

struct CodebookBank {
    std::vector<Codebook> books;

    uint32_t count() const { return static_cast<uint32_t>(books.size()); }
    uint32_t dim() const { return books.empty() ? 0 : books.front().d; }
};

void validate_bank(const CodebookBank& bank);

// .svqc file: magic "SVQC", version, id, n_k, d, codewords, freq.
// Full byte layout in FORMAT.md.
Codebook load_codebook(const std::string& path);
void save_codebook(const Codebook& book, const std::string& path);
CodebookBank load_bank(std::span<const std::string> paths);

// u x v grid of codeword indices (also used for frequency ranks; both live
// in [0, n_k)).
struct IndexGrid {
    uint32_t u = 0;
    uint32_t v = 0;
    std::vector<uint32_t> indices; // u*v

    IndexGrid() = default;
    IndexGrid(uint32_t u_, uint32_t v_) : u(u_), v(v_), indices(static_cast<size_t>(u_) * v_, 0) {}
    size_t cells() const { return static_cast<size_t>(u) * v; }
};

// Per-super-pixel convex weights across K codebooks, grid-major then book:
// w_j(l) at weights[l*K + j].
struct WeightMap {
    uint32_t u = 0;
    uint32_t v = 0;
    uint32_t K = 0;
    std::vector<double> weights;

    WeightMap() = default;
    WeightMap(uint32_t u_, uint32_t v_, uint32_t k)
        : u(u_), v(v_), K(k), weights(static_cast<size_t>(u_) * v_ * k, 0.0) {}
};

void validate_weight_map(const WeightMap& w);

struct TrainStats {
    // Total squared quantization error after each Lloyd iteration
    // (assignment + empty-cluster reseeding + mean update).
    std::vector<double> sse_per_iteration;
};

// Deterministic k-means: k-means++ seeding from `seed`, `iters` Lloyd
// iterations, empty clusters reseeded to the sample farthest from its
// centroid. freq holds final cluster sizes.
Codebook train_codebook(std::span<const double> samples, uint32_t dim, uint32_t n_k,
                        uint64_t seed, uint32_t iters, TrainStats* stats = nullptr);

// Nearest codeword per super-pixel under squared Euclidean distance;
// ties go to the lowest index.
IndexGrid quantize_grid(const LatentGrid& lat, const Codebook& book);

LatentGrid dequantize_grid(const IndexGrid& idx, const Codebook& book);

// Eqn-style weighted combination: out(l) = sum_j w_j(l) * quants[j](l).
LatentGrid combine_weighted(std::span<const LatentGrid> quants, const WeightMap& w);

// w_j(l) = softmax_j(-d_j(l)/tau) where d_j(l) is the squared distance from
// flq(l) to the nearest codeword of book j. Computed decoder-side, costs
// zero bits.
WeightMap predict_weights(const LatentGrid& flq, const CodebookBank& bank, double tau);

} // namespace svq
