#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace svq {

// Pixel raster, samples in [0,1], row-major, channel-interleaved.
// Immutable by convention once constructed; all operations below are pure.
struct Image {
    uint32_t width = 0;
    uint32_t height = 0;
    uint32_t channels = 1; // 1 (gray) or 3
    std::vector<double> data; // width*height*channels samples

    Image() = default;
    Image(uint32_t w, uint32_t h, uint32_t c, double fill = 0.0)
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, fill) {}

    double& at(uint32_t x, uint32_t y, uint32_t ch) {
        return data[(static_cast<size_t>(y) * width + x) * channels + ch];
    }
    double at(uint32_t x, uint32_t y, uint32_t ch) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + ch];
    }
    size_t sample_count() const { return data.size(); }
};

// Checks the Image invariants (size consistency, channels in {1,3},
// samples in [0,1]); throws svq::Error on violation.
void validate_image(const Image& img);

struct VideoSequence {
    std::vector<Image> frames;
    // Frame rate metadata only; never affects coding decisions.
    uint32_t fps_num = 25;
    uint32_t fps_den = 1;

    double frame_rate() const {
        return fps_den ? static_cast<double>(fps_num) / fps_den : 0.0;
    }
};

void validate_video(const VideoSequence& video);

enum class ImageFileFormat { pgm, ppm };

// Binary PGM (P5) / PPM (P6), maxval 255 only. Errors name the byte offset
// of the problem. The explicit-format overload rejects files whose magic
// does not match the requested format.
Image load_image(const std::string& path);
Image load_image(const std::string& path, ImageFileFormat format);

// 8-bit quantization on save is round-half-up: byte = floor(v*255 + 0.5).
// channels must match the format (1 <-> pgm, 3 <-> ppm).
void save_image(const Image& img, const std::string& path, ImageFileFormat format);
void save_image(const Image& img, const std::string& path); // format from channels

// Catmull-Rom bicubic (a = -0.5), half-pixel-centered sampling
// (src = (i+0.5)*in/out - 0.5), clamp-to-edge, output clamped to [0,1].
// Constant inputs are preserved exactly.
Image bicubic_resample(const Image& img, uint32_t out_w, uint32_t out_h);

// Y4M (C444 or Cmono) or a directory of frames named fNNN.pgm / fNNN.ppm,
// taken in name order. All frames must agree in dimensions and channels.
VideoSequence load_video(const std::string& path);

// Writes Y4M when path ends in .y4m, otherwise treats path as a directory
// and writes fNNN.pgm / fNNN.ppm frames.
void save_video(const VideoSequence& video, const std::string& path);

} // namespace svq
