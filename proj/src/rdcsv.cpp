#include "svq/rdcsv.hpp"

#include <charconv>
#include <cstdio>

#include "svq/bytes.hpp"
#include "svq/errors.hpp"

namespace svq {

namespace {

// std::to_chars is locale-independent by construction.
std::string fixed(double v, int precision) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
    return std::string(buf, res.ptr);
}

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace

std::string format_rd_csv(std::span<const RdPoint> points) {
    if (points.empty()) throw Error("emit_rd_csv: no points");
    std::string out = "label,alpha,lq_s,lq_q,b_c,b_LQ,bpp,psnr_db,ssim\n";
    for (const RdPoint& p : points) {
        out += p.label;
        out += ',';
        out += fixed(p.alpha, 4);
        out += ',';
        out += std::to_string(p.lq_s);
        out += ',';
        out += shortest(p.lq_q);
        out += ',';
        out += shortest(p.index_bits);
        out += ',';
        out += shortest(p.lq_bits);
        out += ',';
        out += fixed(p.bpp, 6);
        out += ',';
        out += fixed(p.psnr_db, 4);
        out += ',';
        out += fixed(p.ssim, 6);
        out += '\n';
    }
    return out;
}

void emit_rd_csv(std::span<const RdPoint> points, const std::string& path) {
    std::string csv = format_rd_csv(points);
    write_file_bytes(path, std::span<const uint8_t>(
                               reinterpret_cast<const uint8_t*>(csv.data()), csv.size()));
}

} // namespace svq
