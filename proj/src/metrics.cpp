#include "svq/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "svq/errors.hpp"

namespace svq {

namespace {

void check_same_dims(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw Error("metric inputs must share dimensions and channels");
}

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

} // namespace

double psnr(const Image& a, const Image& b) {
    check_same_dims(a, b);
    double se = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        se += d * d;
    }
    double mse = se / static_cast<double>(a.data.size());
    if (mse <= 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
    check_same_dims(a, b);
    const uint32_t win_w = std::min<uint32_t>(8, a.width);
    const uint32_t win_h = std::min<uint32_t>(8, a.height);
    const double n = static_cast<double>(win_w) * win_h;

    double total = 0.0;
    for (uint32_t ch = 0; ch < a.channels; ++ch) {
        double acc = 0.0;
        size_t windows = 0;
        for (uint32_t y = 0; y + win_h <= a.height; ++y) {
            for (uint32_t x = 0; x + win_w <= a.width; ++x) {
                double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
                for (uint32_t wy = 0; wy < win_h; ++wy) {
                    for (uint32_t wx = 0; wx < win_w; ++wx) {
                        double va = a.at(x + wx, y + wy, ch);
                        double vb = b.at(x + wx, y + wy, ch);
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                    }
                }
                double mu_a = sa / n;
                double mu_b = sb / n;
                double var_a = std::max(0.0, saa / n - mu_a * mu_a);
                double var_b = std::max(0.0, sbb / n - mu_b * mu_b);
                double cov = sab / n - mu_a * mu_b;
                double s = ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) /
                           ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
                acc += s;
                ++windows;
            }
        }
        total += acc / static_cast<double>(windows);
    }
    return total / a.channels;
}

} // namespace svq
