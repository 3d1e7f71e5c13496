#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "svq/bytes.hpp"

namespace svq {

// Fixed-length baseline: u*v*ceil(log2 n_k) bits; 0 for a single-codeword
// alphabet.
uint64_t naive_index_bits(uint32_t u, uint32_t v, uint32_t n_k);

// Bijection between codeword indices and frequency ranks: rank 0 is the
// most frequently used codeword, ties broken by lower original index.
struct Permutation {
    std::vector<uint32_t> forward; // old index -> rank
    std::vector<uint32_t> inverse; // rank -> old index

    uint32_t size() const { return static_cast<uint32_t>(forward.size()); }
};

Permutation build_frequency_permutation(std::span<const uint64_t> freq);

// Rank-to-signed bijection: odd ix -> -(ix+1)/2, even ix -> ix/2, giving
// the coder a bell-shaped alphabet. zigzag_inverse undoes it exactly.
int32_t zigzag_remap(uint32_t ix);
uint32_t zigzag_inverse(int32_t s);

struct GaussianComponent {
    double weight = 1.0;
    double mean = 0.0;
    double sigma = 0.5;
};

// Static per-stream symbol model: a 1- or 2-component Gaussian mixture over
// a contiguous signed support [lo, hi]. The coder uses the mixture density
// integrated over unit bins, quantized to 16-bit cumulative frequencies with
// every bin >= 1, so no in-support symbol has zero probability.
struct SymbolModel {
    std::vector<GaussianComponent> components;
    int32_t lo = 0;
    int32_t hi = 0;

    static constexpr uint32_t kPrecisionBits = 16;
    static constexpr uint32_t kTotalFreq = 1u << kPrecisionBits;
    // Largest representable support: every bin needs frequency >= 1.
    static constexpr uint32_t kMaxSupport = kTotalFreq;

    uint32_t support_size() const { return static_cast<uint32_t>(int64_t(hi) - lo + 1); }
};

void validate_model(const SymbolModel& model);

// Deterministic quantized pmf/cdf for the coder. freq[s-lo] >= 1 for every
// s in [lo,hi]; cum has support_size()+1 entries with cum.back() == 65536.
struct FreqTable {
    int32_t lo = 0;
    std::vector<uint32_t> freq;
    std::vector<uint32_t> cum;
};

FreqTable build_freq_table(const SymbolModel& model);

// M=1: sample mean/std (std floored at 0.5). M=2: 10 EM iterations from the
// mean +- std initialization, sigma floored at 0.5 each step. The fit is a
// function of the symbol histogram, so it is permutation-invariant and
// deterministic. Support is [min, max] of the sequence.
SymbolModel fit_model(std::span<const int32_t> symbols, int mixture_count);

// 64-bit range coder (byte-wise renormalization, 16-bit cumulative
// precision) over the model's quantized static pmf. Symbols outside the
// support are a caller error. decode_symbols reproduces the sequence
// exactly and throws DataError if the stream runs out of bytes.
std::vector<uint8_t> encode_symbols(std::span<const int32_t> symbols,
                                    const SymbolModel& model);
std::vector<int32_t> decode_symbols(std::span<const uint8_t> bytes,
                                    const SymbolModel& model, size_t count);

// Self-contained framed stream: symbol count, serialized model, coded
// payload, CRC-32 over all of it. Layout in FORMAT.md. Readers know the
// expected symbol count from the surrounding structure; a mismatch is a
// DataError, which also keeps corrupt counts from driving allocations.
void write_symbol_stream(ByteWriter& w, std::span<const int32_t> symbols, int mixture_count);
std::vector<int32_t> read_symbol_stream(ByteReader& r, const char* stream_name,
                                        uint64_t expected_count);

// Codeword-rank stream: zigzag remap plus GMM arithmetic coding, with a raw
// fixed-width fallback so the stream never costs more than
// naive_index_bits + 80 bits. Returns/consumes ranks in [0, n_k).
// The written byte count times 8 is the stream's accounted bit cost.
size_t write_rank_stream(ByteWriter& w, std::span<const uint32_t> ranks, uint32_t n_k);
std::vector<uint32_t> read_rank_stream(ByteReader& r, uint32_t n_k,
                                       uint64_t expected_count, const char* stream_name);

// Verifies a rank stream's trailing CRC-32 without decoding it; used by the
// container reader so corruption errors can name the offending stream.
void verify_rank_stream_checksum(std::span<const uint8_t> stream, const std::string& stream_name);

} // namespace svq
