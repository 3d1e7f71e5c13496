#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "svq/codebook.hpp"
#include "svq/image.hpp"

namespace testutil {

// Self-cleaning scratch directory under the system temp dir.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        namespace fs = std::filesystem;
        path_ = fs::temp_directory_path() / ("svq_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    std::string dir() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Deterministic "natural" test image: smooth multi-frequency gradients plus
// block-correlated value noise, so it has realistic spectral decay.
inline svq::Image natural_image(uint32_t w, uint32_t h, uint32_t channels, uint64_t seed) {
    svq::Image img(w, h, channels);
    std::mt19937_64 rng(seed);
    // Low-resolution noise layer, bilinearly upsampled.
    const uint32_t nw = std::max(2u, w / 16), nh = std::max(2u, h / 16);
    std::vector<double> noise(static_cast<size_t>(nw) * nh * channels);
    for (double& v : noise) v = uniform01(rng);

    auto noise_at = [&](double x, double y, uint32_t ch) {
        double fx = x / w * (nw - 1), fy = y / h * (nh - 1);
        uint32_t x0 = static_cast<uint32_t>(fx), y0 = static_cast<uint32_t>(fy);
        uint32_t x1 = std::min(x0 + 1, nw - 1), y1 = std::min(y0 + 1, nh - 1);
        double tx = fx - x0, ty = fy - y0;
        auto at = [&](uint32_t xx, uint32_t yy) {
            return noise[(static_cast<size_t>(yy) * nw + xx) * channels + ch];
        };
        return (1 - tx) * (1 - ty) * at(x0, y0) + tx * (1 - ty) * at(x1, y0) +
               (1 - tx) * ty * at(x0, y1) + tx * ty * at(x1, y1);
    };

    for (uint32_t y = 0; y < h; ++y) {
        for (uint32_t x = 0; x < w; ++x) {
            for (uint32_t ch = 0; ch < channels; ++ch) {
                double fx = static_cast<double>(x) / w;
                double fy = static_cast<double>(y) / h;
                double base = 0.5 + 0.22 * std::sin(2 * std::numbers::pi * (fx * 1.7 + 0.3 * ch)) *
                                        std::cos(2 * std::numbers::pi * (fy * 2.3 - 0.2 * ch));
                double texture = 0.18 * std::sin(2 * std::numbers::pi * (fx * 11 + fy * 7));
                double v = base + texture + 0.18 * (noise_at(x, y, ch) - 0.5);
                img.at(x, y, ch) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return img;
}

inline svq::Image constant_image(uint32_t w, uint32_t h, uint32_t channels, double value) {
    return svq::Image(w, h, channels, value);
}

inline svq::Image random_image(uint32_t w, uint32_t h, uint32_t channels, uint64_t seed) {
    svq::Image img(w, h, channels);
    std::mt19937_64 rng(seed);
    for (double& v : img.data) v = uniform01(rng);
    return img;
}

// Samples from a Zipf(s) distribution truncated to n symbols (0-based),
// via inverse-CDF lookup; deterministic in the seed.
inline std::vector<uint32_t> zipf_samples(uint32_t n, double s, size_t count, uint64_t seed) {
    std::vector<double> cdf(n);
    double total = 0.0;
    for (uint32_t r = 0; r < n; ++r) {
        total += std::pow(static_cast<double>(r + 1), -s);
        cdf[r] = total;
    }
    for (double& c : cdf) c /= total;
    std::mt19937_64 rng(seed);
    std::vector<uint32_t> out(count);
    for (size_t i = 0; i < count; ++i) {
        double u = uniform01(rng);
        out[i] = static_cast<uint32_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (out[i] >= n) out[i] = n - 1;
    }
    return out;
}

// Empirical zeroth-order entropy in bits per symbol.
inline double empirical_entropy_bits(const std::vector<uint32_t>& symbols, uint32_t n) {
    std::vector<size_t> counts(n, 0);
    for (uint32_t s : symbols) counts[s]++;
    double h = 0.0;
    for (size_t c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / symbols.size();
        h -= p * std::log2(p);
    }
    return h;
}

// Small codebook trained on latents from a deterministic image set.
inline svq::CodebookBank small_bank(uint32_t block_size, uint32_t channels, uint32_t n_k,
                                    uint32_t books = 1, uint64_t seed = 11) {
    svq::TransformSpec spec;
    spec.block_size = block_size;
    spec.channels = channels;
    std::vector<double> samples;
    for (uint64_t i = 0; i < 3; ++i) {
        svq::Image img = natural_image(64, 64, channels, seed + i);
        svq::LatentGrid lat = svq::analyze(img, spec);
        samples.insert(samples.end(), lat.data.begin(), lat.data.end());
    }
    svq::CodebookBank bank;
    for (uint32_t b = 0; b < books; ++b) {
        svq::Codebook book =
            svq::train_codebook(samples, spec.latent_dim(), n_k, seed + 100 * b, 8);
        book.id = "test-book-" + std::to_string(b);
        bank.books.push_back(std::move(book));
    }
    return bank;
}

} // namespace testutil
