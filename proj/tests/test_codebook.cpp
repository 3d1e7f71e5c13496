#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "svq/codebook.hpp"
#include "svq/errors.hpp"
#include "testutil.hpp"

using namespace svq;

namespace {

std::vector<double> two_cluster_samples() {
    std::vector<double> samples;
    for (int i = 0; i < 10; ++i) {
        samples.push_back(0);
        samples.push_back(0);
    }
    for (int i = 0; i < 10; ++i) {
        samples.push_back(10);
        samples.push_back(10);
    }
    return samples;
}

LatentGrid grid_from(std::vector<double> values, uint32_t u, uint32_t v, uint32_t d) {
    LatentGrid g(u, v, d);
    g.data = std::move(values);
    return g;
}

} // namespace

TEST_CASE("train: two separated clusters recover both centers") {
    auto samples = two_cluster_samples();
    Codebook book = train_codebook(samples, 2, 2, /*seed=*/1, /*iters=*/5);
    REQUIRE(book.n_k == 2);
    // Exhaustive 2-means on this data has centers {(0,0),(10,10)} and equal
    // cluster sizes; order depends on seeding.
    std::vector<std::pair<double, double>> words = {{book.word(0)[0], book.word(0)[1]},
                                                    {book.word(1)[0], book.word(1)[1]}};
    std::sort(words.begin(), words.end());
    CHECK(words[0].first == doctest::Approx(0.0));
    CHECK(words[0].second == doctest::Approx(0.0));
    CHECK(words[1].first == doctest::Approx(10.0));
    CHECK(words[1].second == doctest::Approx(10.0));
    CHECK(book.freq[0] == 10);
    CHECK(book.freq[1] == 10);
}

TEST_CASE("train: n_k == sample count gives zero quantization error") {
    std::vector<double> samples = {0, 0, 1, 0, 0, 1, 5, 5, -3, 2};
    Codebook book = train_codebook(samples, 2, 5, 7, 3);
    LatentGrid lat = grid_from(samples, 5, 1, 2);
    IndexGrid idx = quantize_grid(lat, book);
    LatentGrid back = dequantize_grid(idx, book);
    for (size_t i = 0; i < samples.size(); ++i)
        CHECK(back.data[i] == doctest::Approx(samples[i]));
}

TEST_CASE("train: n_k=1 yields the sample mean") {
    std::vector<double> samples = {1, 2, 3, 4, 5, 6}; // three 2-d points
    Codebook book = train_codebook(samples, 2, 1, 0, 4);
    CHECK(book.word(0)[0] == doctest::Approx(3.0));
    CHECK(book.word(0)[1] == doctest::Approx(4.0));
    CHECK(book.freq[0] == 3);
}

TEST_CASE("train: deterministic for fixed inputs") {
    auto bank_a = testutil::small_bank(4, 1, 16, 1, 42);
    auto bank_b = testutil::small_bank(4, 1, 16, 1, 42);
    CHECK(bank_a.books[0].codewords == bank_b.books[0].codewords);
    CHECK(bank_a.books[0].freq == bank_b.books[0].freq);
}

TEST_CASE("train: SSE nonincreasing across Lloyd iterations") {
    std::mt19937_64 rng(5);
    std::vector<double> samples(400);
    for (double& v : samples) v = testutil::uniform01(rng);
    TrainStats stats;
    train_codebook(samples, 4, 8, 3, 12, &stats);
    REQUIRE(stats.sse_per_iteration.size() == 12);
    for (size_t i = 1; i < stats.sse_per_iteration.size(); ++i)
        CHECK(stats.sse_per_iteration[i] <= stats.sse_per_iteration[i - 1] + 1e-12);
}

TEST_CASE("train: final MSE nonincreasing in n_k") {
    std::mt19937_64 rng(6);
    std::vector<double> samples(1024);
    for (double& v : samples) v = testutil::uniform01(rng) * 3;
    double prev = 1e300;
    for (uint32_t n_k : {2u, 4u, 8u, 16u, 32u}) {
        Codebook book = train_codebook(samples, 4, n_k, 9, 15);
        LatentGrid lat = grid_from(samples, 256, 1, 4);
        IndexGrid idx = quantize_grid(lat, book);
        LatentGrid back = dequantize_grid(idx, book);
        double sse = 0;
        for (size_t i = 0; i < samples.size(); ++i) {
            double d = back.data[i] - samples[i];
            sse += d * d;
        }
        CHECK(sse <= prev + 1e-9);
        prev = sse;
    }
}

TEST_CASE("train: fewer samples than n_k is an error") {
    std::vector<double> samples = {1, 2};
    CHECK_THROWS_AS(train_codebook(samples, 2, 2, 0, 1), Error);
}

TEST_CASE("quantize: brute-force nearest with tie to lowest index") {
    Codebook book;
    book.id = "t";
    book.n_k = 2;
    book.d = 2;
    book.codewords = {0, 0, 1, 1};
    book.freq = {1, 1};

    LatentGrid lat = grid_from({0.2, 0.1}, 1, 1, 2);
    CHECK(quantize_grid(lat, book).indices[0] == 0);

    lat = grid_from({1.0, 1.0}, 1, 1, 2); // exact codeword 1
    CHECK(quantize_grid(lat, book).indices[0] == 1);

    book.codewords = {0, 0, 1, 0};
    lat = grid_from({0.5, 0.0}, 1, 1, 2); // equidistant
    CHECK(quantize_grid(lat, book).indices[0] == 0);
}

TEST_CASE("quantize: random grids match a brute-force oracle") {
    auto bank = testutil::small_bank(2, 1, 16);
    const Codebook& book = bank.books[0];
    std::mt19937_64 rng(13);
    LatentGrid lat(6, 5, book.d);
    for (double& v : lat.data) v = testutil::uniform01(rng) * 2 - 0.5;
    IndexGrid idx = quantize_grid(lat, book);
    for (size_t l = 0; l < lat.cells(); ++l) {
        uint32_t best = 0;
        double best_d = 1e300;
        for (uint32_t i = 0; i < book.n_k; ++i) {
            double dist = 0;
            for (uint32_t j = 0; j < book.d; ++j) {
                double diff = lat.cell(l)[j] - book.word(i)[j];
                dist += diff * diff;
            }
            if (dist < best_d) {
                best_d = dist;
                best = i;
            }
        }
        CHECK(idx.indices[l] == best);
    }
}

TEST_CASE("quantize: invariant under common positive scaling") {
    auto bank = testutil::small_bank(2, 1, 12);
    Codebook book = bank.books[0];
    std::mt19937_64 rng(14);
    LatentGrid lat(4, 4, book.d);
    for (double& v : lat.data) v = testutil::uniform01(rng);
    IndexGrid base = quantize_grid(lat, book);
    for (double scale : {0.25, 3.0, 117.0}) {
        Codebook scaled = book;
        for (double& c : scaled.codewords) c *= scale;
        LatentGrid lat2 = lat;
        for (double& v : lat2.data) v *= scale;
        IndexGrid idx = quantize_grid(lat2, scaled);
        CHECK(idx.indices == base.indices);
    }
}

TEST_CASE("dequantize: constant index grid and n_k=1 lookup") {
    Codebook book;
    book.id = "d";
    book.n_k = 1;
    book.d = 2;
    book.codewords = {3, 4};
    book.freq = {1};
    IndexGrid idx(2, 2);
    LatentGrid lat = dequantize_grid(idx, book);
    for (size_t l = 0; l < lat.cells(); ++l) {
        CHECK(lat.cell(l)[0] == 3);
        CHECK(lat.cell(l)[1] == 4);
    }
    idx.indices[0] = 5;
    CHECK_THROWS_AS(dequantize_grid(idx, book), DataError);
}

TEST_CASE("combine: one-hot weights select one book") {
    std::mt19937_64 rng(15);
    const uint32_t K = 3;
    std::vector<LatentGrid> grids;
    for (uint32_t k = 0; k < K; ++k) {
        LatentGrid g(3, 2, 4);
        for (double& v : g.data) v = testutil::uniform01(rng);
        grids.push_back(std::move(g));
    }
    for (uint32_t pick = 0; pick < K; ++pick) {
        WeightMap w(3, 2, K);
        for (size_t l = 0; l < 6; ++l) w.weights[l * K + pick] = 1.0;
        LatentGrid out = combine_weighted(grids, w);
        CHECK(out.data == grids[pick].data);
    }
}

TEST_CASE("combine: uniform weights average two books") {
    LatentGrid a = grid_from({2, 4}, 1, 1, 2);
    LatentGrid b = grid_from({4, 8}, 1, 1, 2);
    std::vector<LatentGrid> grids = {a, b};
    WeightMap w(1, 1, 2);
    w.weights = {0.5, 0.5};
    LatentGrid out = combine_weighted(grids, w);
    CHECK(out.data[0] == doctest::Approx(3.0));
    CHECK(out.data[1] == doctest::Approx(6.0));
}

TEST_CASE("combine: K=1 passes through") {
    LatentGrid a = grid_from({1, 2, 3, 4}, 2, 1, 2);
    std::vector<LatentGrid> grids = {a};
    WeightMap w(2, 1, 1);
    w.weights = {1.0, 1.0};
    LatentGrid out = combine_weighted(grids, w);
    CHECK(out.data == a.data);
}

TEST_CASE("combine: rows not summing to 1 are rejected") {
    LatentGrid a = grid_from({1, 2}, 1, 1, 2);
    std::vector<LatentGrid> grids = {a};
    WeightMap w(1, 1, 1);
    w.weights = {0.7};
    CHECK_THROWS_AS(combine_weighted(grids, w), Error);
}

TEST_CASE("predict_weights: near-zero tau concentrates on the matching book") {
    CodebookBank bank;
    Codebook b0;
    b0.id = "near";
    b0.n_k = 1;
    b0.d = 2;
    b0.codewords = {0, 0};
    b0.freq = {1};
    Codebook b1 = b0;
    b1.id = "far";
    b1.codewords = {5, 5}; // distance 50 >= 1 from flq
    bank.books = {b0, b1};

    LatentGrid flq = grid_from({0, 0}, 1, 1, 2); // exactly book 0's codeword
    WeightMap w = predict_weights(flq, bank, 1e-6);
    CHECK(w.weights[0] >= 1.0 - 1e-9);
    CHECK(w.weights[1] <= 1e-9);
}

TEST_CASE("predict_weights: huge tau approaches uniform") {
    auto bank = testutil::small_bank(2, 1, 8, 3);
    LatentGrid flq(2, 2, bank.dim());
    std::mt19937_64 rng(16);
    for (double& v : flq.data) v = testutil::uniform01(rng);
    WeightMap w = predict_weights(flq, bank, 1e9);
    for (double wj : w.weights) CHECK(wj == doctest::Approx(1.0 / 3).epsilon(1e-6));
}

TEST_CASE("predict_weights: K=1 gives weight exactly 1") {
    auto bank = testutil::small_bank(2, 1, 8, 1);
    LatentGrid flq(2, 1, bank.dim());
    WeightMap w = predict_weights(flq, bank, 0.37);
    for (double wj : w.weights) CHECK(wj == 1.0);
}

TEST_CASE("predict_weights: non-positive tau rejected") {
    auto bank = testutil::small_bank(2, 1, 4, 1);
    LatentGrid flq(1, 1, bank.dim());
    CHECK_THROWS_AS(predict_weights(flq, bank, 0.0), Error);
    CHECK_THROWS_AS(predict_weights(flq, bank, -1.0), Error);
}

TEST_CASE("codebook file round trip preserves content and hash") {
    testutil::TempDir tmp("svqc");
    auto bank = testutil::small_bank(4, 1, 16);
    Codebook& book = bank.books[0];
    book.id = "round-trip";
    save_codebook(book, tmp.file("b.svqc"));
    Codebook back = load_codebook(tmp.file("b.svqc"));
    CHECK(back.id == book.id);
    CHECK(back.n_k == book.n_k);
    CHECK(back.d == book.d);
    CHECK(back.codewords == book.codewords);
    CHECK(back.freq == book.freq);
    CHECK(codebook_content_hash(back) == codebook_content_hash(book));
}

TEST_CASE("codebook file: corrupt magic rejected") {
    testutil::TempDir tmp("svqc_bad");
    auto bank = testutil::small_bank(2, 1, 4);
    save_codebook(bank.books[0], tmp.file("b.svqc"));
    auto raw = read_file_bytes(tmp.file("b.svqc"));
    raw[0] ^= 0xFF;
    write_file_bytes(tmp.file("b.svqc"), raw);
    CHECK_THROWS_AS(load_codebook(tmp.file("b.svqc")), DataError);
}
