#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svq/image.hpp"

namespace svq {

// u x v grid of d-dimensional latent vectors, grid-major then channel:
// element (gx, gy, j) lives at data[(gy*u + gx)*d + j].
struct LatentGrid {
    uint32_t u = 0; // grid width, super-pixels
    uint32_t v = 0; // grid height
    uint32_t d = 0; // vector dimension
    std::vector<double> data;

    LatentGrid() = default;
    LatentGrid(uint32_t u_, uint32_t v_, uint32_t d_, double fill = 0.0)
        : u(u_), v(v_), d(d_), data(static_cast<size_t>(u_) * v_ * d_, fill) {}

    size_t cells() const { return static_cast<size_t>(u) * v; }
    double* cell(size_t l) { return data.data() + l * d; }
    const double* cell(size_t l) const { return data.data() + l * d; }
    bool same_shape(const LatentGrid& other) const {
        return u == other.u && v == other.v && d == other.d;
    }
};

enum class TransformBasis : uint8_t { dct = 0 };

// Block transform layout: each p x p x c image block becomes one latent
// vector of dimension d = p*p*c, laid out channel-major: coefficient
// (ch, ky, kx) at index ch*p*p + ky*p + kx.
struct TransformSpec {
    uint32_t block_size = 8; // p
    uint32_t channels = 1;   // c
    TransformBasis basis = TransformBasis::dct;

    uint32_t latent_dim() const { return block_size * block_size * channels; }
    uint32_t grid_w(uint32_t image_w) const { return (image_w + block_size - 1) / block_size; }
    uint32_t grid_h(uint32_t image_h) const { return (image_h + block_size - 1) / block_size; }
};

void validate_transform_spec(const TransformSpec& spec);

// Elementwise-affine parameterization of the (beta, gamma) generator:
//   beta  = beta_from_yq  * yq + beta_from_lq  * flq + beta_bias
//   gamma = gamma_from_yq * yq + gamma_from_lq * flq + gamma_bias
// The defaults give beta = 0, gamma = flq - yq, so modulation reduces to
// the linear blend (1-alpha)*yq + alpha*flq with exact endpoints.
struct ThetaParams {
    double beta_from_yq = 0.0;
    double beta_from_lq = 0.0;
    double beta_bias = 0.0;
    double gamma_from_yq = -1.0;
    double gamma_from_lq = 1.0;
    double gamma_bias = 0.0;

    bool is_default() const {
        return beta_from_yq == 0.0 && beta_from_lq == 0.0 && beta_bias == 0.0 &&
               gamma_from_yq == -1.0 && gamma_from_lq == 1.0 && gamma_bias == 0.0;
    }
};

// Theta parameter file: exactly 6 little-endian IEEE-754 doubles in the
// field order above (48 bytes). See FORMAT.md.
ThetaParams load_theta(const std::string& path);
void save_theta(const ThetaParams& theta, const std::string& path);

struct CftParams {
    double alpha = 1.0; // control strength, in [0,1]
    ThetaParams theta;
};

// Forward block transform. The image is padded to block multiples by edge
// replication; each block goes through an orthonormal 2-D DCT-II per channel.
LatentGrid analyze(const Image& img, const TransformSpec& spec);

// Inverse of analyze: per-block inverse DCT, crop to (out_w, out_h), clamp
// to [0,1]. Round-trips analyze() to ~1e-15 per sample before clamping.
Image synthesize(const LatentGrid& lat, const TransformSpec& spec,
                 uint32_t out_w, uint32_t out_h);

// Conditioned modulation: ymod = yq + alpha*(beta.*yq + gamma) with
// (beta,gamma) produced elementwise by theta from (yq, flq).
// alpha = 0 returns yq unchanged; with the default theta alpha = 1 returns
// flq exactly.
LatentGrid cft_modulate(const LatentGrid& yq, const LatentGrid& flq,
                        const CftParams& params);

} // namespace svq
