#pragma once

#include "svq/image.hpp"

namespace svq {

// 10*log10(1/MSE) with peak 1.0, capped at 99 dB (the MSE = 0 sentinel).
double psnr(const Image& a, const Image& b);

// Mean local SSIM: uniform 8x8 windows, stride 1, C1 = 0.01^2, C2 = 0.03^2,
// computed per channel then averaged. Images smaller than the window fall
// back to a single whole-image window.
double ssim(const Image& a, const Image& b);

} // namespace svq
