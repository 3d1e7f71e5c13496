#include "svq/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "svq/bytes.hpp"
#include "svq/errors.hpp"
#include "svq/parallel.hpp"

namespace svq {

namespace {

constexpr char kCodebookMagic[4] = {'S', 'V', 'Q', 'C'};
constexpr uint16_t kCodebookVersion = 1;

double sq_dist(const double* a, const double* b, uint32_t d) {
    double acc = 0.0;
    for (uint32_t j = 0; j < d; ++j) {
        double diff = a[j] - b[j];
        acc += diff * diff;
    }
    return acc;
}

// mt19937_64 output mapped to [0,1) without distribution objects, so the
// stream is identical on every standard library.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

uint32_t nearest_word(const double* x, const Codebook& book) {
    uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (uint32_t i = 0; i < book.n_k; ++i) {
        double dist = sq_dist(x, book.word(i), book.d);
        if (dist < best_d) { // strict: ties keep the lowest index
            best_d = dist;
            best = i;
        }
    }
    return best;
}

void serialize_payload(const Codebook& book, ByteWriter& w) {
    for (double c : book.codewords) w.f64(c);
    for (uint64_t f : book.freq) w.u64(f);
}

} // namespace

void validate_codebook(const Codebook& book) {
    if (book.n_k == 0) throw Error("codebook must have at least one codeword");
    if (book.d == 0) throw Error("codebook dimension must be >= 1");
    if (book.codewords.size() != static_cast<size_t>(book.n_k) * book.d)
        throw Error("codebook data size mismatch");
    if (book.freq.size() != book.n_k) throw Error("codebook freq size mismatch");
    for (double c : book.codewords)
        if (!std::isfinite(c)) throw Error("codebook contains non-finite codeword");
}

uint32_t codebook_content_hash(const Codebook& book) {
    ByteWriter w;
    serialize_payload(book, w);
    return crc32_ieee(w.view());
}

void validate_bank(const CodebookBank& bank) {
    if (bank.books.empty()) throw Error("codebook bank must contain at least one book");
    for (const Codebook& b : bank.books) {
        validate_codebook(b);
        if (b.d != bank.books.front().d)
            throw Error("codebooks in a bank must share the latent dimension");
    }
}

Codebook load_codebook(const std::string& path) {
    auto raw = read_file_bytes(path);
    ByteReader r(raw, path);
    auto magic = r.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), kCodebookMagic))
        r.fail("bad magic, not a codebook file");
    uint16_t version = r.u16();
    if (version != kCodebookVersion)
        r.fail("unsupported codebook version " + std::to_string(version));
    Codebook book;
    uint16_t id_len = r.u16();
    book.id = r.str(id_len);
    book.n_k = r.u32();
    book.d = r.u32();
    if (book.n_k == 0 || book.n_k > (1u << 24)) r.fail("codeword count out of range");
    if (book.d == 0 || book.d > (1u << 20)) r.fail("dimension out of range");
    size_t n_values = static_cast<size_t>(book.n_k) * book.d;
    if (r.remaining() < n_values * 8 + static_cast<size_t>(book.n_k) * 8)
        r.fail("truncated codebook payload");
    book.codewords.resize(n_values);
    for (double& c : book.codewords) c = r.f64();
    book.freq.resize(book.n_k);
    for (uint64_t& f : book.freq) f = r.u64();
    if (!r.at_end()) r.fail("trailing bytes after codebook payload");
    validate_codebook(book);
    return book;
}

void save_codebook(const Codebook& book, const std::string& path) {
    validate_codebook(book);
    if (book.id.size() > 0xFFFF) throw Error("codebook id too long");
    ByteWriter w;
    w.bytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kCodebookMagic), 4));
    w.u16(kCodebookVersion);
    w.u16(static_cast<uint16_t>(book.id.size()));
    w.str(book.id);
    w.u32(book.n_k);
    w.u32(book.d);
    serialize_payload(book, w);
    auto buf = w.take();
    write_file_bytes(path, buf);
}

CodebookBank load_bank(std::span<const std::string> paths) {
    CodebookBank bank;
    for (const std::string& p : paths) bank.books.push_back(load_codebook(p));
    validate_bank(bank);
    return bank;
}

void validate_weight_map(const WeightMap& w) {
    if (w.K == 0) throw Error("weight map needs K >= 1");
    if (w.weights.size() != static_cast<size_t>(w.u) * w.v * w.K)
        throw Error("weight map size mismatch");
    size_t cells = static_cast<size_t>(w.u) * w.v;
    for (size_t l = 0; l < cells; ++l) {
        double sum = 0.0;
        for (uint32_t j = 0; j < w.K; ++j) {
            double wj = w.weights[l * w.K + j];
            if (!(wj >= 0.0)) throw Error("weight map entries must be >= 0");
            sum += wj;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw Error("weight rows must sum to 1 (got " + std::to_string(sum) + ")");
    }
}

Codebook train_codebook(std::span<const double> samples, uint32_t dim, uint32_t n_k,
                        uint64_t seed, uint32_t iters, TrainStats* stats) {
    if (dim == 0) throw Error("train_codebook: dimension must be >= 1");
    if (samples.size() % dim != 0) throw Error("train_codebook: sample buffer size mismatch");
    const size_t n = samples.size() / dim;
    if (n_k == 0) throw Error("train_codebook: n_k must be >= 1");
    if (n < n_k)
        throw Error("train_codebook: need at least n_k samples (" + std::to_string(n) +
                    " < " + std::to_string(n_k) + ")");
    if (iters == 0) throw Error("train_codebook: iters must be >= 1");

    auto sample = [&](size_t i) { return samples.data() + i * dim; };

    Codebook book;
    book.n_k = n_k;
    book.d = dim;
    book.codewords.resize(static_cast<size_t>(n_k) * dim);
    book.freq.assign(n_k, 0);

    // k-means++ seeding.
    std::mt19937_64 rng(seed);
    std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
    size_t first = static_cast<size_t>(rng() % n);
    std::copy_n(sample(first), dim, book.word(0));
    for (uint32_t k = 1; k < n_k; ++k) {
        const double* just_added = book.word(k - 1);
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            dist2[i] = std::min(dist2[i], sq_dist(sample(i), just_added, dim));
            total += dist2[i];
        }
        size_t pick = 0;
        if (total > 0.0) {
            double r = uniform01(rng) * total;
            double cum = 0.0;
            pick = n - 1;
            for (size_t i = 0; i < n; ++i) {
                cum += dist2[i];
                if (cum > r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<size_t>(rng() % n); // all mass on chosen points already
        }
        std::copy_n(sample(pick), dim, book.word(k));
    }

    // Lloyd iterations.
    std::vector<uint32_t> assign(n, 0);
    std::vector<double> assign_d2(n, 0.0);
    std::vector<double> sums(static_cast<size_t>(n_k) * dim);
    std::vector<uint64_t> counts(n_k);
    if (stats) stats->sse_per_iteration.clear();

    auto assign_all = [&] {
        parallel_for(n, [&](size_t i) {
            uint32_t best = nearest_word(sample(i), book);
            assign[i] = best;
            assign_d2[i] = sq_dist(sample(i), book.word(best), dim);
        });
    };

    for (uint32_t it = 0; it < iters; ++it) {
        assign_all();

        // Reseed empty clusters to the sample farthest from its centroid.
        std::fill(counts.begin(), counts.end(), 0);
        for (size_t i = 0; i < n; ++i) counts[assign[i]]++;
        for (uint32_t k = 0; k < n_k; ++k) {
            if (counts[k] != 0) continue;
            size_t far = 0;
            double far_d = -1.0;
            for (size_t i = 0; i < n; ++i) {
                if (counts[assign[i]] <= 1) continue; // keep donor clusters nonempty
                if (assign_d2[i] > far_d) {
                    far_d = assign_d2[i];
                    far = i;
                }
            }
            if (far_d < 0.0) continue; // every cluster is a singleton
            counts[assign[far]]--;
            assign[far] = k;
            assign_d2[far] = 0.0;
            counts[k] = 1;
            std::copy_n(sample(far), dim, book.word(k));
        }

        // Mean update.
        std::fill(sums.begin(), sums.end(), 0.0);
        for (size_t i = 0; i < n; ++i) {
            double* acc = sums.data() + static_cast<size_t>(assign[i]) * dim;
            const double* x = sample(i);
            for (uint32_t j = 0; j < dim; ++j) acc[j] += x[j];
        }
        for (uint32_t k = 0; k < n_k; ++k) {
            if (counts[k] == 0) continue;
            double inv = 1.0 / static_cast<double>(counts[k]);
            double* w = book.word(k);
            const double* acc = sums.data() + static_cast<size_t>(k) * dim;
            for (uint32_t j = 0; j < dim; ++j) w[j] = acc[j] * inv;
        }

        if (stats) {
            double sse = 0.0;
            for (size_t i = 0; i < n; ++i)
                sse += sq_dist(sample(i), book.word(assign[i]), dim);
            stats->sse_per_iteration.push_back(sse);
        }
    }

    // Final usage counts under the trained codewords.
    assign_all();
    std::fill(book.freq.begin(), book.freq.end(), 0);
    for (size_t i = 0; i < n; ++i) book.freq[assign[i]]++;
    return book;
}

IndexGrid quantize_grid(const LatentGrid& lat, const Codebook& book) {
    validate_codebook(book);
    if (lat.d != book.d) throw Error("quantize_grid: latent/codebook dimension mismatch");
    IndexGrid idx(lat.u, lat.v);
    parallel_for(lat.cells(), [&](size_t l) { idx.indices[l] = nearest_word(lat.cell(l), book); });
    return idx;
}

LatentGrid dequantize_grid(const IndexGrid& idx, const Codebook& book) {
    validate_codebook(book);
    LatentGrid lat(idx.u, idx.v, book.d);
    for (size_t l = 0; l < idx.cells(); ++l) {
        uint32_t i = idx.indices[l];
        if (i >= book.n_k)
            throw DataError("dequantize_grid: index " + std::to_string(i) +
                            " out of range for n_k=" + std::to_string(book.n_k));
        std::copy_n(book.word(i), book.d, lat.cell(l));
    }
    return lat;
}

LatentGrid combine_weighted(std::span<const LatentGrid> quants, const WeightMap& w) {
    if (quants.empty()) throw Error("combine_weighted: no grids");
    if (w.K != quants.size()) throw Error("combine_weighted: K mismatch");
    const LatentGrid& first = quants.front();
    for (const LatentGrid& g : quants)
        if (!g.same_shape(first)) throw Error("combine_weighted: grid shapes differ");
    if (w.u != first.u || w.v != first.v)
        throw Error("combine_weighted: weight map shape mismatch");
    validate_weight_map(w);

    LatentGrid out(first.u, first.v, first.d);
    for (size_t l = 0; l < out.cells(); ++l) {
        double* dst = out.cell(l);
        for (uint32_t j = 0; j < w.K; ++j) {
            double wj = w.weights[l * w.K + j];
            const double* src = quants[j].cell(l);
            for (uint32_t e = 0; e < out.d; ++e) dst[e] += wj * src[e];
        }
    }
    return out;
}

WeightMap predict_weights(const LatentGrid& flq, const CodebookBank& bank, double tau) {
    validate_bank(bank);
    if (flq.d != bank.dim()) throw Error("predict_weights: dimension mismatch");
    if (!(tau > 0.0)) throw Error("predict_weights: tau must be positive");

    const uint32_t K = bank.count();
    WeightMap w(flq.u, flq.v, K);
    parallel_for(flq.cells(), [&](size_t l) {
        const double* x = flq.cell(l);
        double* row = w.weights.data() + l * K;
        double dmin = std::numeric_limits<double>::infinity();
        for (uint32_t j = 0; j < K; ++j) {
            const Codebook& book = bank.books[j];
            uint32_t best = nearest_word(x, book);
            row[j] = sq_dist(x, book.word(best), book.d);
            dmin = std::min(dmin, row[j]);
        }
        double sum = 0.0;
        for (uint32_t j = 0; j < K; ++j) {
            row[j] = std::exp(-(row[j] - dmin) / tau);
            sum += row[j];
        }
        for (uint32_t j = 0; j < K; ++j) row[j] /= sum;
    });
    return w;
}

} // namespace svq
