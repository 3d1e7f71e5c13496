#include "svq/entropy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "svq/errors.hpp"

namespace svq {

namespace {

constexpr uint64_t kRenormThreshold = 1ull << 56;

// Standard normal CDF.
double phi(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

double mixture_bin_prob(const SymbolModel& model, int64_t s) {
    double p = 0.0;
    for (const GaussianComponent& c : model.components) {
        double a = (static_cast<double>(s) - 0.5 - c.mean) / c.sigma;
        double b = (static_cast<double>(s) + 0.5 - c.mean) / c.sigma;
        p += c.weight * (phi(b) - phi(a));
    }
    return std::max(p, 0.0);
}

// ---- range coder -------------------------------------------------------

class RangeEncoder {
public:
    explicit RangeEncoder(std::vector<uint8_t>& out) : out_(out) {}

    void encode(uint32_t cum, uint32_t freq) {
        uint64_t r = range_ >> SymbolModel::kPrecisionBits;
        uint64_t add = r * cum;
        uint64_t new_low = low_ + add;
        if (new_low < low_) propagate_carry();
        low_ = new_low;
        range_ = r * freq;
        while (range_ < kRenormThreshold) {
            out_.push_back(static_cast<uint8_t>(low_ >> 56));
            low_ <<= 8;
            range_ <<= 8;
        }
    }

    void flush() {
        for (int i = 0; i < 8; ++i) {
            out_.push_back(static_cast<uint8_t>(low_ >> 56));
            low_ <<= 8;
        }
    }

private:
    void propagate_carry() {
        // The invariant low + range <= 2^64 guarantees at least one byte has
        // been emitted before a carry can occur.
        size_t i = out_.size();
        while (i > 0) {
            if (++out_[--i] != 0) return;
        }
        throw Error("range coder carry underflow"); // unreachable on valid state
    }

    std::vector<uint8_t>& out_;
    uint64_t low_ = 0;
    uint64_t range_ = ~0ull;
};

class RangeDecoder {
public:
    RangeDecoder(std::span<const uint8_t> bytes, const char* name)
        : p_(bytes.data()), end_(bytes.data() + bytes.size()), name_(name) {
        for (int i = 0; i < 8; ++i) code_ = (code_ << 8) | next_byte();
    }

    uint32_t decode_freq() {
        uint64_t r = range_ >> SymbolModel::kPrecisionBits;
        uint64_t f = (code_ - low_) / r; // mod-2^64 subtraction is exact here
        return static_cast<uint32_t>(
            std::min<uint64_t>(f, SymbolModel::kTotalFreq - 1));
    }

    void advance(uint32_t cum, uint32_t freq) {
        uint64_t r = range_ >> SymbolModel::kPrecisionBits;
        low_ += r * cum;
        range_ = r * freq;
        while (range_ < kRenormThreshold) {
            code_ = (code_ << 8) | next_byte();
            low_ <<= 8;
            range_ <<= 8;
        }
    }

private:
    uint8_t next_byte() {
        if (p_ == end_)
            throw DataError(std::string(name_) + ": entropy stream exhausted");
        return *p_++;
    }

    const uint8_t* p_;
    const uint8_t* end_;
    const char* name_;
    uint64_t low_ = 0;
    uint64_t range_ = ~0ull;
    uint64_t code_ = 0;
};

// ---- model fitting -----------------------------------------------------

struct Histogram {
    int64_t lo = 0;
    std::vector<uint64_t> counts;
    uint64_t total = 0;
};

Histogram build_histogram(std::span<const int32_t> symbols) {
    int32_t lo = *std::min_element(symbols.begin(), symbols.end());
    int32_t hi = *std::max_element(symbols.begin(), symbols.end());
    Histogram h;
    h.lo = lo;
    h.counts.assign(static_cast<size_t>(int64_t(hi) - lo + 1), 0);
    for (int32_t s : symbols) h.counts[static_cast<size_t>(int64_t(s) - lo)]++;
    h.total = symbols.size();
    return h;
}

double normal_pdf(double x, double mu, double sigma) {
    double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

} // namespace

uint64_t naive_index_bits(uint32_t u, uint32_t v, uint32_t n_k) {
    if (u == 0 || v == 0 || n_k == 0) throw Error("naive_index_bits: arguments must be >= 1");
    uint32_t width = static_cast<uint32_t>(std::bit_width(n_k - 1));
    return static_cast<uint64_t>(u) * v * width;
}

Permutation build_frequency_permutation(std::span<const uint64_t> freq) {
    if (freq.empty()) throw Error("build_frequency_permutation: empty frequency table");
    const uint32_t n = static_cast<uint32_t>(freq.size());
    Permutation perm;
    perm.inverse.resize(n);
    std::iota(perm.inverse.begin(), perm.inverse.end(), 0u);
    std::stable_sort(perm.inverse.begin(), perm.inverse.end(),
                     [&](uint32_t a, uint32_t b) { return freq[a] > freq[b]; });
    perm.forward.resize(n);
    for (uint32_t rank = 0; rank < n; ++rank) perm.forward[perm.inverse[rank]] = rank;
    return perm;
}

int32_t zigzag_remap(uint32_t ix) {
    if (ix >= (1u << 31)) throw Error("zigzag_remap: rank too large");
    if (ix & 1u) return -static_cast<int32_t>((ix + 1) / 2);
    return static_cast<int32_t>(ix / 2);
}

uint32_t zigzag_inverse(int32_t s) {
    if (s < 0) return static_cast<uint32_t>(-2 * static_cast<int64_t>(s) - 1);
    return static_cast<uint32_t>(2 * static_cast<int64_t>(s));
}

void validate_model(const SymbolModel& model) {
    if (model.components.empty() || model.components.size() > 2)
        throw Error("symbol model must have 1 or 2 components");
    double wsum = 0.0;
    for (const GaussianComponent& c : model.components) {
        if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
            throw DataError("symbol model component weight invalid");
        if (!(c.sigma > 0.0) || !std::isfinite(c.sigma))
            throw DataError("symbol model sigma must be positive and finite");
        if (!std::isfinite(c.mean)) throw DataError("symbol model mean must be finite");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        throw DataError("symbol model weights must sum to 1");
    if (model.hi < model.lo) throw DataError("symbol model support empty");
    if (int64_t(model.hi) - model.lo + 1 > SymbolModel::kMaxSupport)
        throw DataError("symbol model support exceeds " +
                        std::to_string(SymbolModel::kMaxSupport) + " symbols");
}

FreqTable build_freq_table(const SymbolModel& model) {
    validate_model(model);
    const uint32_t n = model.support_size();

    std::vector<double> raw(n);
    double total = 0.0;
    for (uint32_t i = 0; i < n; ++i) {
        raw[i] = mixture_bin_prob(model, int64_t(model.lo) + i);
        total += raw[i];
    }
    if (!(total > 1e-300)) {
        std::fill(raw.begin(), raw.end(), 1.0); // degenerate model: fall back to uniform
        total = static_cast<double>(n);
    }

    // Largest-remainder quantization with a reserved +1 floor per bin.
    const uint32_t budget = SymbolModel::kTotalFreq - n;
    FreqTable table;
    table.lo = model.lo;
    table.freq.resize(n);
    std::vector<double> frac(n);
    uint64_t assigned = 0;
    for (uint32_t i = 0; i < n; ++i) {
        double scaled = raw[i] / total * budget;
        double base = std::floor(scaled);
        table.freq[i] = 1 + static_cast<uint32_t>(base);
        frac[i] = scaled - base;
        assigned += table.freq[i];
    }
    uint64_t leftover = SymbolModel::kTotalFreq - assigned;
    if (leftover > 0) {
        std::vector<uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(),
                         [&](uint32_t a, uint32_t b) { return frac[a] > frac[b]; });
        for (uint64_t i = 0; i < leftover; ++i) table.freq[order[i % n]]++;
    }

    table.cum.resize(n + 1);
    table.cum[0] = 0;
    for (uint32_t i = 0; i < n; ++i) table.cum[i + 1] = table.cum[i] + table.freq[i];
    return table;
}

SymbolModel fit_model(std::span<const int32_t> symbols, int mixture_count) {
    if (symbols.empty()) throw Error("fit_model: empty symbol sequence");
    if (mixture_count != 1 && mixture_count != 2)
        throw Error("fit_model: mixture count must be 1 or 2");

    Histogram h = build_histogram(symbols);
    if (h.counts.size() > SymbolModel::kMaxSupport)
        throw DataError("fit_model: symbol support too large for 16-bit pmf");

    double inv_n = 1.0 / static_cast<double>(h.total);
    double mean = 0.0;
    for (size_t i = 0; i < h.counts.size(); ++i)
        mean += static_cast<double>(h.counts[i]) * static_cast<double>(h.lo + int64_t(i));
    mean *= inv_n;
    double var = 0.0;
    for (size_t i = 0; i < h.counts.size(); ++i) {
        double dx = static_cast<double>(h.lo + int64_t(i)) - mean;
        var += static_cast<double>(h.counts[i]) * dx * dx;
    }
    var *= inv_n;
    double std_dev = std::sqrt(var);

    SymbolModel model;
    model.lo = static_cast<int32_t>(h.lo);
    model.hi = static_cast<int32_t>(h.lo + static_cast<int64_t>(h.counts.size()) - 1);

    if (mixture_count == 1) {
        model.components = {{1.0, mean, std::max(std_dev, 0.5)}};
        return model;
    }

    // Two components, EM over the histogram.
    GaussianComponent c0{0.5, mean - std_dev, std::max(std_dev, 0.5)};
    GaussianComponent c1{0.5, mean + std_dev, std::max(std_dev, 0.5)};
    const size_t bins = h.counts.size();
    std::vector<double> resp0(bins);
    for (int iter = 0; iter < 10; ++iter) {
        // E-step.
        double n0 = 0.0, n1 = 0.0;
        double sum0 = 0.0, sum1 = 0.0;
        for (size_t i = 0; i < bins; ++i) {
            if (h.counts[i] == 0) continue;
            double x = static_cast<double>(h.lo + int64_t(i));
            double d0 = c0.weight * normal_pdf(x, c0.mean, c0.sigma);
            double d1 = c1.weight * normal_pdf(x, c1.mean, c1.sigma);
            double tot = d0 + d1;
            double g0 = tot > 0.0 ? d0 / tot : c0.weight;
            resp0[i] = g0;
            double w = static_cast<double>(h.counts[i]);
            n0 += w * g0;
            n1 += w * (1.0 - g0);
            sum0 += w * g0 * x;
            sum1 += w * (1.0 - g0) * x;
        }
        if (n0 <= 0.0 || n1 <= 0.0) break; // one component vanished, keep params
        // M-step.
        c0.weight = n0 * inv_n;
        c1.weight = n1 * inv_n;
        c0.mean = sum0 / n0;
        c1.mean = sum1 / n1;
        double v0 = 0.0, v1 = 0.0;
        for (size_t i = 0; i < bins; ++i) {
            if (h.counts[i] == 0) continue;
            double x = static_cast<double>(h.lo + int64_t(i));
            double w = static_cast<double>(h.counts[i]);
            double dx0 = x - c0.mean;
            double dx1 = x - c1.mean;
            v0 += w * resp0[i] * dx0 * dx0;
            v1 += w * (1.0 - resp0[i]) * dx1 * dx1;
        }
        c0.sigma = std::max(std::sqrt(v0 / n0), 0.5);
        c1.sigma = std::max(std::sqrt(v1 / n1), 0.5);
    }
    // Renormalize the weights so serialization round-trips the invariant.
    double wt = c0.weight + c1.weight;
    c0.weight /= wt;
    c1.weight = 1.0 - c0.weight;
    model.components = {c0, c1};
    return model;
}

std::vector<uint8_t> encode_symbols(std::span<const int32_t> symbols,
                                    const SymbolModel& model) {
    if (symbols.empty()) return {};
    FreqTable table = build_freq_table(model);
    std::vector<uint8_t> out;
    out.reserve(symbols.size() / 2 + 16);
    RangeEncoder enc(out);
    for (int32_t s : symbols) {
        if (s < model.lo || s > model.hi)
            throw Error("encode_symbols: symbol " + std::to_string(s) +
                        " outside model support [" + std::to_string(model.lo) + "," +
                        std::to_string(model.hi) + "]");
        size_t bin = static_cast<size_t>(int64_t(s) - model.lo);
        enc.encode(table.cum[bin], table.freq[bin]);
    }
    enc.flush();
    return out;
}

std::vector<int32_t> decode_symbols(std::span<const uint8_t> bytes,
                                    const SymbolModel& model, size_t count) {
    std::vector<int32_t> out;
    if (count == 0) return out;
    FreqTable table = build_freq_table(model);
    RangeDecoder dec(bytes, "symbol stream");
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        uint32_t f = dec.decode_freq();
        // Largest bin with cum[bin] <= f.
        size_t bin = static_cast<size_t>(
            std::upper_bound(table.cum.begin(), table.cum.end(), f) - table.cum.begin() - 1);
        dec.advance(table.cum[bin], table.freq[bin]);
        out.push_back(static_cast<int32_t>(int64_t(table.lo) + static_cast<int64_t>(bin)));
    }
    return out;
}

void write_symbol_stream(ByteWriter& w, std::span<const int32_t> symbols, int mixture_count) {
    if (symbols.size() > 0xFFFFFFFFull) throw Error("symbol stream too long");
    SymbolModel model = symbols.empty()
                            ? SymbolModel{{{1.0, 0.0, 0.5}}, 0, 0}
                            : fit_model(symbols, mixture_count);
    std::vector<uint8_t> coded = encode_symbols(symbols, model);
    if (coded.size() > 0xFFFFFFFFull) throw Error("coded stream too long");

    size_t start = w.size();
    w.u32(static_cast<uint32_t>(symbols.size()));
    w.u8(static_cast<uint8_t>(model.components.size()));
    for (const GaussianComponent& c : model.components) {
        w.f64(c.weight);
        w.f64(c.mean);
        w.f64(c.sigma);
    }
    w.i32(model.lo);
    w.i32(model.hi);
    w.u32(static_cast<uint32_t>(coded.size()));
    w.bytes(coded);
    w.u32(crc32_ieee(w.view_from(start)));
}

std::vector<int32_t> read_symbol_stream(ByteReader& r, const char* stream_name,
                                        uint64_t expected_count) {
    size_t start = r.pos();
    uint32_t count = r.u32();
    if (count != expected_count)
        r.fail(std::string(stream_name) + ": symbol count " + std::to_string(count) +
               " does not match expected " + std::to_string(expected_count));
    uint8_t m = r.u8();
    if (m != 1 && m != 2) r.fail(std::string(stream_name) + ": bad mixture count");
    SymbolModel model;
    for (uint8_t i = 0; i < m; ++i) {
        GaussianComponent c;
        c.weight = r.f64();
        c.mean = r.f64();
        c.sigma = r.f64();
        model.components.push_back(c);
    }
    model.lo = r.i32();
    model.hi = r.i32();
    uint32_t nbytes = r.u32();
    if (nbytes > r.remaining()) r.fail(std::string(stream_name) + ": truncated coded payload");
    auto coded = r.bytes(nbytes);
    uint32_t want_crc = crc32_ieee(r.viewed(start, r.pos()));
    uint32_t got_crc = r.u32();
    if (want_crc != got_crc)
        throw DataError(std::string(stream_name) + ": checksum mismatch");
    validate_model(model);
    if (count == 0 && nbytes != 0)
        r.fail(std::string(stream_name) + ": nonempty payload for empty stream");
    return decode_symbols(coded, model, count);
}

namespace {

constexpr uint8_t kRankCodecGmm = 0;
constexpr uint8_t kRankCodecRaw = 1;
constexpr uint8_t kRankCodecTrivial = 2; // n_k == 1: ranks carry no information

void pack_bits(ByteWriter& w, std::span<const uint32_t> values, uint32_t width) {
    uint64_t acc = 0;
    uint32_t used = 0;
    for (uint32_t v : values) {
        acc |= static_cast<uint64_t>(v) << used;
        used += width;
        while (used >= 8) {
            w.u8(static_cast<uint8_t>(acc));
            acc >>= 8;
            used -= 8;
        }
    }
    if (used > 0) w.u8(static_cast<uint8_t>(acc));
}

std::vector<uint32_t> unpack_bits(ByteReader& r, size_t count, uint32_t width,
                                  const char* stream_name) {
    size_t total_bits = count * width;
    size_t nbytes = (total_bits + 7) / 8;
    if (nbytes > r.remaining()) r.fail(std::string(stream_name) + ": truncated raw ranks");
    auto bytes = r.bytes(nbytes);
    std::vector<uint32_t> out(count);
    uint64_t acc = 0;
    uint32_t avail = 0;
    size_t next = 0;
    uint32_t mask = width == 32 ? 0xFFFFFFFFu : ((1u << width) - 1);
    for (size_t i = 0; i < count; ++i) {
        while (avail < width) {
            acc |= static_cast<uint64_t>(bytes[next++]) << avail;
            avail += 8;
        }
        out[i] = static_cast<uint32_t>(acc) & mask;
        acc >>= width;
        avail -= width;
    }
    return out;
}

} // namespace

size_t write_rank_stream(ByteWriter& w, std::span<const uint32_t> ranks, uint32_t n_k) {
    if (n_k == 0) throw Error("write_rank_stream: n_k must be >= 1");
    if (ranks.size() > 0xFFFFFFFFull) throw Error("write_rank_stream: too many ranks");
    for (uint32_t rk : ranks)
        if (rk >= n_k) throw Error("write_rank_stream: rank out of range");

    const uint32_t width = static_cast<uint32_t>(std::bit_width(n_k - 1));

    size_t start = w.size();
    if (n_k == 1) {
        w.u8(kRankCodecTrivial);
        w.u32(static_cast<uint32_t>(ranks.size()));
        return w.size() - start;
    }

    // GMM branch: zigzag-remapped ranks through the mixture coder. Skipped
    // when the symbol span cannot satisfy the 16-bit pmf contract.
    std::vector<int32_t> symbols(ranks.size());
    for (size_t i = 0; i < ranks.size(); ++i) symbols[i] = zigzag_remap(ranks[i]);
    bool gmm_ok = true;
    if (!symbols.empty()) {
        auto [mn, mx] = std::minmax_element(symbols.begin(), symbols.end());
        gmm_ok = int64_t(*mx) - *mn + 1 <= SymbolModel::kMaxSupport;
    }
    ByteWriter gmm;
    if (gmm_ok) write_symbol_stream(gmm, symbols, 2);

    // Raw branch: fixed-width bit packing plus CRC.
    ByteWriter raw;
    raw.u32(static_cast<uint32_t>(ranks.size()));
    pack_bits(raw, ranks, width);
    raw.u32(crc32_ieee(raw.view()));

    if (gmm_ok && gmm.size() <= raw.size()) {
        w.u8(kRankCodecGmm);
        w.bytes(gmm.view());
    } else {
        w.u8(kRankCodecRaw);
        w.bytes(raw.view());
    }
    return w.size() - start;
}

std::vector<uint32_t> read_rank_stream(ByteReader& r, uint32_t n_k,
                                       uint64_t expected_count, const char* stream_name) {
    uint8_t codec = r.u8();
    std::vector<uint32_t> ranks;
    if (codec == kRankCodecTrivial) {
        if (n_k != 1) r.fail(std::string(stream_name) + ": trivial codec needs n_k == 1");
        uint32_t count = r.u32();
        if (count != expected_count)
            r.fail(std::string(stream_name) + ": rank count mismatch");
        ranks.assign(count, 0);
    } else if (codec == kRankCodecGmm) {
        std::vector<int32_t> symbols = read_symbol_stream(r, stream_name, expected_count);
        ranks.resize(symbols.size());
        for (size_t i = 0; i < symbols.size(); ++i) ranks[i] = zigzag_inverse(symbols[i]);
    } else if (codec == kRankCodecRaw) {
        size_t start = r.pos();
        uint32_t count = r.u32();
        if (count != expected_count)
            r.fail(std::string(stream_name) + ": rank count mismatch");
        uint32_t width = static_cast<uint32_t>(std::bit_width(n_k - 1));
        ranks = unpack_bits(r, count, width, stream_name);
        uint32_t want = crc32_ieee(r.viewed(start, r.pos()));
        uint32_t got = r.u32();
        if (want != got) throw DataError(std::string(stream_name) + ": checksum mismatch");
    } else {
        r.fail(std::string(stream_name) + ": unknown rank codec");
    }
    for (uint32_t rk : ranks)
        if (rk >= n_k)
            throw DataError(std::string(stream_name) + ": decoded rank " +
                            std::to_string(rk) + " out of range for n_k=" + std::to_string(n_k));
    return ranks;
}

void verify_rank_stream_checksum(std::span<const uint8_t> stream,
                                 const std::string& stream_name) {
    if (stream.empty()) throw DataError(stream_name + ": empty rank stream");
    uint8_t codec = stream[0];
    if (codec == kRankCodecTrivial) {
        if (stream.size() != 5) throw DataError(stream_name + ": malformed trivial stream");
        return;
    }
    if (codec != kRankCodecGmm && codec != kRankCodecRaw)
        throw DataError(stream_name + ": unknown rank codec");
    if (stream.size() < 5) throw DataError(stream_name + ": truncated rank stream");
    auto body = stream.subspan(1, stream.size() - 5);
    uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= static_cast<uint32_t>(stream[stream.size() - 4 + i]) << (8 * i);
    if (stored != crc32_ieee(body))
        throw DataError(stream_name + ": checksum mismatch");
}

} // namespace svq
