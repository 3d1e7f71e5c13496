#include "svq/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "svq/bytes.hpp"
#include "svq/errors.hpp"
#include "svq/parallel.hpp"

namespace svq {

namespace {

// Orthonormal DCT-II matrix: T[k][n] = a(k) cos(pi (2n+1) k / (2p)),
// a(0) = sqrt(1/p), a(k>0) = sqrt(2/p).
std::vector<double> dct_matrix(uint32_t p) {
    std::vector<double> t(static_cast<size_t>(p) * p);
    double a0 = std::sqrt(1.0 / p);
    double ak = std::sqrt(2.0 / p);
    for (uint32_t k = 0; k < p; ++k)
        for (uint32_t n = 0; n < p; ++n)
            t[k * p + n] = (k == 0 ? a0 : ak) *
                           std::cos(std::numbers::pi * (2.0 * n + 1.0) * k / (2.0 * p));
    return t;
}

// C = T * X * T^t  (forward) or X = T^t * C * T (inverse), both expressed
// as row transform followed by column transform with fixed summation order.
void apply_2d(const std::vector<double>& t, uint32_t p, const double* in, double* out,
              bool inverse, double* scratch) {
    // rows: scratch[k][j] = sum_n M[k][n] * in[n][j]
    for (uint32_t k = 0; k < p; ++k) {
        for (uint32_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (uint32_t n = 0; n < p; ++n) {
                double m = inverse ? t[n * p + k] : t[k * p + n];
                acc += m * in[n * p + j];
            }
            scratch[k * p + j] = acc;
        }
    }
    // cols: out[k][l] = sum_j scratch[k][j] * M[l][j]
    for (uint32_t k = 0; k < p; ++k) {
        for (uint32_t l = 0; l < p; ++l) {
            double acc = 0.0;
            for (uint32_t j = 0; j < p; ++j) {
                double m = inverse ? t[j * p + l] : t[l * p + j];
                acc += scratch[k * p + j] * m;
            }
            out[k * p + l] = acc;
        }
    }
}

} // namespace

void validate_transform_spec(const TransformSpec& spec) {
    if (spec.block_size == 0) throw Error("transform block size must be >= 1");
    if (spec.block_size > 4096) throw Error("transform block size unreasonably large");
    if (spec.channels != 1 && spec.channels != 3)
        throw Error("transform channels must be 1 or 3");
    if (spec.basis != TransformBasis::dct) throw Error("unknown transform basis");
}

ThetaParams load_theta(const std::string& path) {
    auto raw = read_file_bytes(path);
    if (raw.size() != 48)
        throw DataError(path + ": theta file must be exactly 48 bytes (6 doubles), got " +
                        std::to_string(raw.size()));
    ByteReader r(raw, path);
    ThetaParams t;
    t.beta_from_yq = r.f64();
    t.beta_from_lq = r.f64();
    t.beta_bias = r.f64();
    t.gamma_from_yq = r.f64();
    t.gamma_from_lq = r.f64();
    t.gamma_bias = r.f64();
    for (double v : {t.beta_from_yq, t.beta_from_lq, t.beta_bias, t.gamma_from_yq,
                     t.gamma_from_lq, t.gamma_bias})
        if (!std::isfinite(v)) throw DataError(path + ": theta coefficients must be finite");
    return t;
}

void save_theta(const ThetaParams& theta, const std::string& path) {
    ByteWriter w;
    w.f64(theta.beta_from_yq);
    w.f64(theta.beta_from_lq);
    w.f64(theta.beta_bias);
    w.f64(theta.gamma_from_yq);
    w.f64(theta.gamma_from_lq);
    w.f64(theta.gamma_bias);
    auto buf = w.take();
    write_file_bytes(path, buf);
}

LatentGrid analyze(const Image& img, const TransformSpec& spec) {
    validate_image(img);
    validate_transform_spec(spec);
    if (img.channels != spec.channels)
        throw Error("image channels do not match transform spec");

    const uint32_t p = spec.block_size;
    const uint32_t c = spec.channels;
    LatentGrid lat(spec.grid_w(img.width), spec.grid_h(img.height), spec.latent_dim());
    const std::vector<double> t = dct_matrix(p);

    parallel_for(lat.cells(), [&](size_t l) {
        uint32_t gx = static_cast<uint32_t>(l % lat.u);
        uint32_t gy = static_cast<uint32_t>(l / lat.u);
        std::vector<double> block(static_cast<size_t>(p) * p);
        std::vector<double> coef(block.size());
        std::vector<double> scratch(block.size());
        double* out = lat.cell(l);
        for (uint32_t ch = 0; ch < c; ++ch) {
            for (uint32_t by = 0; by < p; ++by) {
                uint32_t sy = std::min(gy * p + by, img.height - 1); // replicate edge
                for (uint32_t bx = 0; bx < p; ++bx) {
                    uint32_t sx = std::min(gx * p + bx, img.width - 1);
                    block[by * p + bx] = img.at(sx, sy, ch);
                }
            }
            apply_2d(t, p, block.data(), coef.data(), /*inverse=*/false, scratch.data());
            std::copy(coef.begin(), coef.end(), out + static_cast<size_t>(ch) * p * p);
        }
    });
    return lat;
}

Image synthesize(const LatentGrid& lat, const TransformSpec& spec,
                 uint32_t out_w, uint32_t out_h) {
    validate_transform_spec(spec);
    const uint32_t p = spec.block_size;
    const uint32_t c = spec.channels;
    if (lat.d != spec.latent_dim())
        throw Error("latent dimension does not match transform spec");
    if (lat.u != spec.grid_w(out_w) || lat.v != spec.grid_h(out_h))
        throw Error("latent grid does not cover the requested output dimensions");

    Image img(out_w, out_h, c);
    const std::vector<double> t = dct_matrix(p);

    parallel_for(lat.cells(), [&](size_t l) {
        uint32_t gx = static_cast<uint32_t>(l % lat.u);
        uint32_t gy = static_cast<uint32_t>(l / lat.u);
        std::vector<double> block(static_cast<size_t>(p) * p);
        std::vector<double> scratch(block.size());
        const double* in = lat.cell(l);
        for (uint32_t ch = 0; ch < c; ++ch) {
            apply_2d(t, p, in + static_cast<size_t>(ch) * p * p, block.data(),
                     /*inverse=*/true, scratch.data());
            for (uint32_t by = 0; by < p; ++by) {
                uint32_t sy = gy * p + by;
                if (sy >= out_h) break; // crop padding
                for (uint32_t bx = 0; bx < p; ++bx) {
                    uint32_t sx = gx * p + bx;
                    if (sx >= out_w) break;
                    img.at(sx, sy, ch) = std::clamp(block[by * p + bx], 0.0, 1.0);
                }
            }
        }
    });
    return img;
}

LatentGrid cft_modulate(const LatentGrid& yq, const LatentGrid& flq,
                        const CftParams& params) {
    if (!yq.same_shape(flq))
        throw Error("cft_modulate: latent shapes differ");
    if (!(params.alpha >= 0.0 && params.alpha <= 1.0))
        throw Error("cft_modulate: alpha must be in [0,1]");

    LatentGrid out(yq.u, yq.v, yq.d);
    const double a = params.alpha;
    if (a == 0.0) {
        out.data = yq.data;
        return out;
    }
    const ThetaParams& th = params.theta;
    if (th.is_default()) {
        // Linear blend form: exact at both endpoints.
        const double b = 1.0 - a;
        for (size_t i = 0; i < out.data.size(); ++i)
            out.data[i] = b * yq.data[i] + a * flq.data[i];
        return out;
    }
    for (size_t i = 0; i < out.data.size(); ++i) {
        double y = yq.data[i], f = flq.data[i];
        double beta = th.beta_from_yq * y + th.beta_from_lq * f + th.beta_bias;
        double gamma = th.gamma_from_yq * y + th.gamma_from_lq * f + th.gamma_bias;
        out.data[i] = y + a * (beta * y + gamma);
    }
    return out;
}

} // namespace svq
