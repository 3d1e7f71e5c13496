#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace svq {

// One measured rate-distortion point; rate fields echo rate_report.
struct RdPoint {
    std::string label;
    double alpha = 0.0;
    uint32_t lq_s = 0;
    double lq_q = 0.0;
    double index_bits = 0.0; // b_c
    double lq_bits = 0.0;    // b_LQ
    double bpp = 0.0;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

// Deterministic, locale-independent CSV with the fixed column order
// label,alpha,lq_s,lq_q,b_c,b_LQ,bpp,psnr_db,ssim; bpp has 6 decimals.
std::string format_rd_csv(std::span<const RdPoint> points);
void emit_rd_csv(std::span<const RdPoint> points, const std::string& path);

} // namespace svq
