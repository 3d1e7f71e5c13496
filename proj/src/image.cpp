#include "svq/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "svq/bytes.hpp"
#include "svq/errors.hpp"

namespace svq {

namespace {

uint8_t to_byte(double v) {
    double scaled = std::floor(v * 255.0 + 0.5); // round half up
    if (scaled < 0.0) scaled = 0.0;
    if (scaled > 255.0) scaled = 255.0;
    return static_cast<uint8_t>(scaled);
}

// --- PNM parsing ------------------------------------------------------

struct PnmCursor {
    const std::vector<uint8_t>& buf;
    size_t pos = 0;
    const std::string& path;

    [[noreturn]] void fail(const std::string& what) const {
        throw DataError(path + ": " + what + " (byte offset " + std::to_string(pos) + ")");
    }
    bool eof() const { return pos >= buf.size(); }
    uint8_t peek() const { return buf[pos]; }

    // Skips whitespace and '#' comments between header tokens.
    void skip_space() {
        while (!eof()) {
            uint8_t c = buf[pos];
            if (c == '#') {
                while (!eof() && buf[pos] != '\n') ++pos;
            } else if (std::isspace(c)) {
                ++pos;
            } else {
                break;
            }
        }
    }

    uint32_t read_uint(const char* field) {
        skip_space();
        if (eof() || !std::isdigit(peek())) fail(std::string("expected ") + field);
        uint64_t v = 0;
        while (!eof() && std::isdigit(peek())) {
            v = v * 10 + (buf[pos] - '0');
            if (v > 0xFFFFFFFFull) fail(std::string(field) + " out of range");
            ++pos;
        }
        return static_cast<uint32_t>(v);
    }
};

Image load_pnm(const std::string& path) {
    std::vector<uint8_t> raw = read_file_bytes(path);
    PnmCursor cur{raw, 0, path};

    if (raw.size() < 2) cur.fail("not a PGM/PPM file (too short)");
    char m0 = static_cast<char>(raw[0]);
    char m1 = static_cast<char>(raw[1]);
    if (m0 != 'P' || (m1 != '5' && m1 != '6')) cur.fail("bad magic, expected P5 or P6");
    uint32_t channels = (m1 == '5') ? 1 : 3;
    cur.pos = 2;

    uint32_t w = cur.read_uint("width");
    uint32_t h = cur.read_uint("height");
    uint32_t maxval = cur.read_uint("maxval");
    if (w == 0 || h == 0) cur.fail("zero image dimension");
    if (maxval != 255) cur.fail("unsupported maxval " + std::to_string(maxval) + " (only 255)");
    if (cur.eof() || !std::isspace(cur.peek())) cur.fail("expected single whitespace after maxval");
    ++cur.pos;

    size_t need = static_cast<size_t>(w) * h * channels;
    size_t have = raw.size() - cur.pos;
    if (have < need) {
        cur.pos = raw.size();
        cur.fail("truncated pixel data, need " + std::to_string(need) + " bytes, have " +
                 std::to_string(have));
    }

    Image img(w, h, channels);
    for (size_t i = 0; i < need; ++i) img.data[i] = raw[cur.pos + i] / 255.0;
    return img;
}

std::string format_ext(ImageFileFormat f) {
    return f == ImageFileFormat::pgm ? "pgm" : "ppm";
}

// --- Catmull-Rom kernel ------------------------------------------------

// Weights for the four taps around sample position with fractional phase t.
// w1 is implied by w0+w1+w2+w3 = 1 and is never materialized: the output is
// computed as v1 + w0*(v0-v1) + w2*(v2-v1) + w3*(v3-v1), which preserves
// constants exactly.
struct CubicWeights {
    double w0, w2, w3;
};

CubicWeights catmull_rom(double t) {
    double t2 = t * t, t3 = t2 * t;
    CubicWeights w;
    w.w0 = -0.5 * t3 + t2 - 0.5 * t;
    w.w2 = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
    w.w3 = 0.5 * t3 - 0.5 * t2;
    return w;
}

int clamp_index(long i, long n) {
    if (i < 0) return 0;
    if (i >= n) return static_cast<int>(n - 1);
    return static_cast<int>(i);
}

// One separable pass along x; rows and columns share this by swapping
// the accessor strides.
void resample_axis(const double* src, double* dst, long n_in, long n_out,
                   long lines, long in_stride, long line_stride_in,
                   long out_stride, long line_stride_out, long channels) {
    double scale = static_cast<double>(n_in) / static_cast<double>(n_out);
    for (long o = 0; o < n_out; ++o) {
        double pos = (o + 0.5) * scale - 0.5;
        double base = std::floor(pos);
        double t = pos - base;
        long b = static_cast<long>(base);
        int i0 = clamp_index(b - 1, n_in);
        int i1 = clamp_index(b, n_in);
        int i2 = clamp_index(b + 1, n_in);
        int i3 = clamp_index(b + 2, n_in);
        CubicWeights w = catmull_rom(t);
        for (long line = 0; line < lines; ++line) {
            for (long ch = 0; ch < channels; ++ch) {
                const double* s = src + line * line_stride_in + ch;
                double v0 = s[i0 * in_stride];
                double v1 = s[i1 * in_stride];
                double v2 = s[i2 * in_stride];
                double v3 = s[i3 * in_stride];
                dst[line * line_stride_out + o * out_stride + ch] =
                    v1 + w.w0 * (v0 - v1) + w.w2 * (v2 - v1) + w.w3 * (v3 - v1);
            }
        }
    }
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// --- Y4M --------------------------------------------------------------

VideoSequence load_y4m(const std::string& path) {
    std::vector<uint8_t> raw = read_file_bytes(path);
    auto line_end = std::find(raw.begin(), raw.end(), '\n');
    if (line_end == raw.end()) throw DataError(path + ": missing Y4M header line");
    std::string header(raw.begin(), line_end);
    if (header.rfind("YUV4MPEG2", 0) != 0)
        throw DataError(path + ": bad Y4M signature");

    uint32_t w = 0, h = 0, fn = 25, fd = 1;
    uint32_t channels = 3; // Y4M default chroma is 4:2:0, which we reject below
    std::string colorspace = "C420";
    size_t i = 9;
    while (i < header.size()) {
        while (i < header.size() && header[i] == ' ') ++i;
        if (i >= header.size()) break;
        size_t j = header.find(' ', i);
        if (j == std::string::npos) j = header.size();
        std::string param = header.substr(i, j - i);
        i = j;
        if (param.empty()) continue;
        switch (param[0]) {
        case 'W': w = static_cast<uint32_t>(std::strtoul(param.c_str() + 1, nullptr, 10)); break;
        case 'H': h = static_cast<uint32_t>(std::strtoul(param.c_str() + 1, nullptr, 10)); break;
        case 'F': {
            if (std::sscanf(param.c_str(), "F%u:%u", &fn, &fd) != 2 || fd == 0)
                throw DataError(path + ": malformed Y4M frame rate '" + param + "'");
            break;
        }
        case 'C': colorspace = param; break;
        default: break; // interlacing / aspect params ignored
        }
    }
    if (w == 0 || h == 0) throw DataError(path + ": Y4M header missing W or H");
    if (colorspace == "C444") {
        channels = 3;
    } else if (colorspace == "Cmono") {
        channels = 1;
    } else {
        throw DataError(path + ": unsupported Y4M colorspace '" + colorspace +
                        "' (only C444 and Cmono)");
    }

    VideoSequence video;
    video.fps_num = fn;
    video.fps_den = fd;
    size_t plane = static_cast<size_t>(w) * h;
    size_t pos = static_cast<size_t>(line_end - raw.begin()) + 1;
    while (pos < raw.size()) {
        auto fe = std::find(raw.begin() + static_cast<long>(pos), raw.end(), '\n');
        if (fe == raw.end()) throw DataError(path + ": unterminated FRAME header");
        std::string fh(raw.begin() + static_cast<long>(pos), fe);
        if (fh.rfind("FRAME", 0) != 0) throw DataError(path + ": expected FRAME marker");
        pos = static_cast<size_t>(fe - raw.begin()) + 1;
        if (raw.size() - pos < plane * channels)
            throw DataError(path + ": truncated frame payload");
        Image img(w, h, channels);
        for (uint32_t ch = 0; ch < channels; ++ch) {
            const uint8_t* src = raw.data() + pos + static_cast<size_t>(ch) * plane;
            for (size_t px = 0; px < plane; ++px)
                img.data[px * channels + ch] = src[px] / 255.0;
        }
        pos += plane * channels;
        video.frames.push_back(std::move(img));
    }
    if (video.frames.empty()) throw DataError(path + ": Y4M stream has no frames");
    return video;
}

void save_y4m(const VideoSequence& video, const std::string& path) {
    validate_video(video);
    const Image& f0 = video.frames.front();
    ByteWriter w;
    char header[128];
    std::snprintf(header, sizeof header, "YUV4MPEG2 W%u H%u F%u:%u Ip A1:1 %s\n",
                  f0.width, f0.height, video.fps_num, video.fps_den,
                  f0.channels == 1 ? "Cmono" : "C444");
    w.str(header);
    size_t plane = static_cast<size_t>(f0.width) * f0.height;
    for (const Image& img : video.frames) {
        w.str("FRAME\n");
        for (uint32_t ch = 0; ch < img.channels; ++ch)
            for (size_t px = 0; px < plane; ++px)
                w.u8(to_byte(img.data[px * img.channels + ch]));
    }
    auto buf = w.take();
    write_file_bytes(path, buf);
}

} // namespace

void validate_image(const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw Error("image channels must be 1 or 3, got " + std::to_string(img.channels));
    if (img.width == 0 || img.height == 0)
        throw Error("image dimensions must be positive");
    size_t need = static_cast<size_t>(img.width) * img.height * img.channels;
    if (img.data.size() != need)
        throw Error("image data length " + std::to_string(img.data.size()) +
                    " does not match dimensions (" + std::to_string(need) + ")");
    for (double v : img.data)
        if (!(v >= 0.0 && v <= 1.0))
            throw Error("image sample out of [0,1]");
}

void validate_video(const VideoSequence& video) {
    if (video.frames.empty()) throw Error("video must have at least one frame");
    const Image& f0 = video.frames.front();
    for (const Image& f : video.frames) {
        if (f.width != f0.width || f.height != f0.height || f.channels != f0.channels)
            throw Error("video frames disagree in dimensions or channels");
    }
}

Image load_image(const std::string& path) { return load_pnm(path); }

Image load_image(const std::string& path, ImageFileFormat format) {
    Image img = load_pnm(path);
    uint32_t want = format == ImageFileFormat::pgm ? 1u : 3u;
    if (img.channels != want)
        throw DataError(path + ": file is not " + format_ext(format));
    return img;
}

void save_image(const Image& img, const std::string& path, ImageFileFormat format) {
    validate_image(img);
    uint32_t want = format == ImageFileFormat::pgm ? 1u : 3u;
    if (img.channels != want)
        throw Error("cannot save " + std::to_string(img.channels) + "-channel image as " +
                    format_ext(format));
    ByteWriter w;
    char header[64];
    std::snprintf(header, sizeof header, "%s\n%u %u\n255\n",
                  format == ImageFileFormat::pgm ? "P5" : "P6", img.width, img.height);
    w.str(header);
    for (double v : img.data) w.u8(to_byte(v));
    auto buf = w.take();
    write_file_bytes(path, buf);
}

void save_image(const Image& img, const std::string& path) {
    save_image(img, path, img.channels == 1 ? ImageFileFormat::pgm : ImageFileFormat::ppm);
}

Image bicubic_resample(const Image& img, uint32_t out_w, uint32_t out_h) {
    validate_image(img);
    if (out_w == 0 || out_h == 0) throw Error("resample target dimensions must be >= 1");

    long c = img.channels;
    // Pass 1: horizontal, (w,h) -> (out_w, h).
    std::vector<double> mid(static_cast<size_t>(out_w) * img.height * c);
    resample_axis(img.data.data(), mid.data(), img.width, out_w, img.height,
                  /*in_stride=*/c, /*line_stride_in=*/static_cast<long>(img.width) * c,
                  /*out_stride=*/c, /*line_stride_out=*/static_cast<long>(out_w) * c, c);

    // Pass 2: vertical, (out_w, h) -> (out_w, out_h).
    Image out(out_w, out_h, img.channels);
    resample_axis(mid.data(), out.data.data(), img.height, out_h, out_w,
                  /*in_stride=*/static_cast<long>(out_w) * c, /*line_stride_in=*/c,
                  /*out_stride=*/static_cast<long>(out_w) * c, /*line_stride_out=*/c, c);

    for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
    return out;
}

VideoSequence load_video(const std::string& path) {
    namespace fs = std::filesystem;
    if (fs::is_directory(path)) {
        std::vector<std::string> names;
        for (const auto& entry : fs::directory_iterator(path)) {
            if (!entry.is_regular_file()) continue;
            std::string name = entry.path().filename().string();
            if (name.size() < 2 || name[0] != 'f') continue;
            if (has_suffix(name, ".pgm") || has_suffix(name, ".ppm")) names.push_back(name);
        }
        if (names.empty()) throw DataError(path + ": no fNNN.pgm / fNNN.ppm frames found");
        std::sort(names.begin(), names.end());
        VideoSequence video;
        for (const std::string& name : names)
            video.frames.push_back(load_image((fs::path(path) / name).string()));
        const Image& f0 = video.frames.front();
        for (size_t t = 1; t < video.frames.size(); ++t) {
            const Image& f = video.frames[t];
            if (f.width != f0.width || f.height != f0.height || f.channels != f0.channels)
                throw DataError(path + "/" + names[t] + ": frame dimensions mismatch (" +
                                std::to_string(f.width) + "x" + std::to_string(f.height) +
                                " vs " + std::to_string(f0.width) + "x" +
                                std::to_string(f0.height) + ")");
        }
        return video;
    }
    return load_y4m(path);
}

void save_video(const VideoSequence& video, const std::string& path) {
    namespace fs = std::filesystem;
    if (has_suffix(path, ".y4m")) {
        save_y4m(video, path);
        return;
    }
    validate_video(video);
    fs::create_directories(path);
    const char* ext = video.frames.front().channels == 1 ? "pgm" : "ppm";
    int digits = 3;
    for (size_t t = video.frames.size(); t > 1000; t /= 10) ++digits;
    char name[64];
    for (size_t t = 0; t < video.frames.size(); ++t) {
        std::snprintf(name, sizeof name, "f%0*zu.%s", digits, t, ext);
        save_image(video.frames[t], (fs::path(path) / name).string());
    }
}

} // namespace svq
