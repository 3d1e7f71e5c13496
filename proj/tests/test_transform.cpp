#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "svq/errors.hpp"
#include "svq/transform.hpp"
#include "testutil.hpp"

using namespace svq;

namespace {

// Direct O(p^4) 2-D DCT-II summation, the independent oracle.
std::vector<double> naive_dct2(const std::vector<double>& block, uint32_t p) {
    std::vector<double> out(block.size());
    for (uint32_t k1 = 0; k1 < p; ++k1) {
        for (uint32_t k2 = 0; k2 < p; ++k2) {
            double acc = 0.0;
            for (uint32_t n1 = 0; n1 < p; ++n1)
                for (uint32_t n2 = 0; n2 < p; ++n2)
                    acc += block[n1 * p + n2] *
                           std::cos(std::numbers::pi * (2.0 * n1 + 1) * k1 / (2.0 * p)) *
                           std::cos(std::numbers::pi * (2.0 * n2 + 1) * k2 / (2.0 * p));
            double a1 = k1 == 0 ? std::sqrt(1.0 / p) : std::sqrt(2.0 / p);
            double a2 = k2 == 0 ? std::sqrt(1.0 / p) : std::sqrt(2.0 / p);
            out[k1 * p + k2] = a1 * a2 * acc;
        }
    }
    return out;
}

} // namespace

TEST_CASE("analyze: constant image gives pure DC = 2k for p=2") {
    for (double k : {0.0, 0.25, 1.0}) {
        Image img = testutil::constant_image(4, 4, 1, k);
        TransformSpec spec{2, 1, TransformBasis::dct};
        LatentGrid lat = analyze(img, spec);
        CHECK(lat.u == 2);
        CHECK(lat.v == 2);
        CHECK(lat.d == 4);
        for (size_t l = 0; l < lat.cells(); ++l) {
            CHECK(lat.cell(l)[0] == doctest::Approx(2.0 * k).epsilon(1e-12));
            for (uint32_t j = 1; j < 4; ++j)
                CHECK(lat.cell(l)[j] == doctest::Approx(0.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("analyze matches the naive DCT oracle") {
    // 2x2 delta image from the worked example, plus a random 4x4 block.
    {
        Image img(2, 2, 1);
        img.data = {1, 0, 0, 0};
        TransformSpec spec{2, 1, TransformBasis::dct};
        LatentGrid lat = analyze(img, spec);
        auto expect = naive_dct2(img.data, 2);
        for (uint32_t j = 0; j < 4; ++j)
            CHECK(lat.cell(0)[j] == doctest::Approx(expect[j]).epsilon(1e-12));
    }
    {
        Image img = testutil::random_image(4, 4, 1, 77);
        TransformSpec spec{4, 1, TransformBasis::dct};
        LatentGrid lat = analyze(img, spec);
        auto expect = naive_dct2(img.data, 4);
        for (uint32_t j = 0; j < 16; ++j)
            CHECK(lat.cell(0)[j] == doctest::Approx(expect[j]).epsilon(1e-10));
    }
}

TEST_CASE("analyze with p=1 reshapes the image") {
    Image img = testutil::random_image(3, 2, 1, 8);
    TransformSpec spec{1, 1, TransformBasis::dct};
    LatentGrid lat = analyze(img, spec);
    CHECK(lat.u == 3);
    CHECK(lat.v == 2);
    CHECK(lat.d == 1);
    for (size_t i = 0; i < img.data.size(); ++i) CHECK(lat.data[i] == doctest::Approx(img.data[i]));
}

TEST_CASE("synthesize(analyze(img)) is exact on padding-free dims") {
    for (uint32_t channels : {1u, 3u}) {
        Image img = testutil::random_image(16, 8, channels, 21);
        TransformSpec spec{4, channels, TransformBasis::dct};
        LatentGrid lat = analyze(img, spec);
        Image back = synthesize(lat, spec, 16, 8);
        double max_err = 0;
        for (size_t i = 0; i < img.data.size(); ++i)
            max_err = std::max(max_err, std::abs(back.data[i] - img.data[i]));
        CHECK(max_err < 1e-6);
    }
}

TEST_CASE("round trip with padding crops back to the original") {
    Image img = testutil::natural_image(13, 9, 1, 4);
    TransformSpec spec{8, 1, TransformBasis::dct};
    LatentGrid lat = analyze(img, spec);
    CHECK(lat.u == 2);
    CHECK(lat.v == 2);
    Image back = synthesize(lat, spec, 13, 9);
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-9));
}

TEST_CASE("all-zero latent synthesizes black") {
    TransformSpec spec{4, 1, TransformBasis::dct};
    LatentGrid lat(2, 2, 16);
    Image img = synthesize(lat, spec, 8, 8);
    for (double v : img.data) CHECK(v == 0.0);
}

TEST_CASE("DC-only latent synthesizes the constant image") {
    TransformSpec spec{2, 1, TransformBasis::dct};
    LatentGrid lat(3, 3, 4);
    const double k = 0.4;
    for (size_t l = 0; l < lat.cells(); ++l) lat.cell(l)[0] = 2.0 * k;
    Image img = synthesize(lat, spec, 6, 6);
    for (double v : img.data) CHECK(v == doctest::Approx(k).epsilon(1e-12));
}

TEST_CASE("cft: alpha=0 returns yq exactly for any theta") {
    LatentGrid yq(2, 2, 3), flq(2, 2, 3);
    std::mt19937_64 rng(12);
    for (double& v : yq.data) v = testutil::uniform01(rng) * 4 - 2;
    for (double& v : flq.data) v = testutil::uniform01(rng) * 4 - 2;
    ThetaParams odd{0.5, -0.25, 0.1, 2.0, 0.3, -1.0};
    for (const ThetaParams& theta : {ThetaParams{}, odd}) {
        LatentGrid out = cft_modulate(yq, flq, CftParams{0.0, theta});
        for (size_t i = 0; i < yq.data.size(); ++i) CHECK(out.data[i] == yq.data[i]);
    }
}

TEST_CASE("cft: default theta endpoints and midpoint") {
    LatentGrid yq(1, 1, 1), flq(1, 1, 1);
    yq.data[0] = 2.0;
    flq.data[0] = 4.0;
    CHECK(cft_modulate(yq, flq, CftParams{1.0, {}}).data[0] == 4.0);
    CHECK(cft_modulate(yq, flq, CftParams{0.5, {}}).data[0] == doctest::Approx(3.0));

    // alpha=1 is exact even on cancellation-prone values.
    LatentGrid a(1, 1, 2), b(1, 1, 2);
    a.data = {1e16, 0.3};
    b.data = {1.0, 2.1};
    LatentGrid out = cft_modulate(a, b, CftParams{1.0, {}});
    CHECK(out.data[0] == 1.0);
    CHECK(out.data[1] == 2.1);
}

TEST_CASE("cft: general theta matches the affine formula") {
    LatentGrid yq(2, 1, 2), flq(2, 1, 2);
    yq.data = {0.5, -1.0, 2.0, 0.0};
    flq.data = {1.5, 0.5, -0.5, 1.0};
    ThetaParams theta{0.2, -0.1, 0.05, 0.7, -0.3, 0.4};
    double alpha = 0.6;
    LatentGrid out = cft_modulate(yq, flq, CftParams{alpha, theta});
    for (size_t i = 0; i < yq.data.size(); ++i) {
        double y = yq.data[i], f = flq.data[i];
        double beta = 0.2 * y - 0.1 * f + 0.05;
        double gamma = 0.7 * y - 0.3 * f + 0.4;
        CHECK(out.data[i] == doctest::Approx(y + alpha * (beta * y + gamma)).epsilon(1e-15));
    }
}

TEST_CASE("cft: ||ymod - yq|| is nondecreasing in alpha (default theta)") {
    LatentGrid yq(4, 4, 8), flq(4, 4, 8);
    std::mt19937_64 rng(31);
    for (double& v : yq.data) v = testutil::uniform01(rng) * 2 - 1;
    for (double& v : flq.data) v = testutil::uniform01(rng) * 2 - 1;
    double prev = -1.0;
    for (double alpha : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
        LatentGrid out = cft_modulate(yq, flq, CftParams{alpha, {}});
        double norm = 0;
        for (size_t i = 0; i < out.data.size(); ++i) {
            double d = out.data[i] - yq.data[i];
            norm += d * d;
        }
        CHECK(norm >= prev);
        prev = norm;
    }
}

TEST_CASE("cft: shape mismatch is an error") {
    LatentGrid a(2, 2, 3), b(2, 2, 4);
    CHECK_THROWS_AS(cft_modulate(a, b, CftParams{}), Error);
}

TEST_CASE("theta file round trip and validation") {
    testutil::TempDir tmp("theta");
    ThetaParams theta{0.1, 0.2, 0.3, -0.4, 0.5, -0.6};
    save_theta(theta, tmp.file("t.bin"));
    ThetaParams back = load_theta(tmp.file("t.bin"));
    CHECK(back.beta_from_yq == 0.1);
    CHECK(back.gamma_bias == -0.6);
    CHECK_FALSE(back.is_default());

    std::vector<uint8_t> junk(47, 0);
    write_file_bytes(tmp.file("short.bin"), junk);
    CHECK_THROWS_AS(load_theta(tmp.file("short.bin")), DataError);
}
