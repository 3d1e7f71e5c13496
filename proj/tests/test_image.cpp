#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "svq/bytes.hpp"
#include "svq/errors.hpp"
#include "svq/image.hpp"
#include "testutil.hpp"

using namespace svq;

namespace {

void write_raw(const std::string& path, const std::string& header,
               const std::vector<uint8_t>& payload) {
    ByteWriter w;
    w.str(header);
    w.bytes(payload);
    auto buf = w.take();
    write_file_bytes(path, buf);
}

} // namespace

TEST_CASE("load P5: bytes map to [0,1] by v/255") {
    testutil::TempDir tmp("pgm_load");
    write_raw(tmp.file("a.pgm"), "P5\n2 1\n255\n", {0, 255});
    Image img = load_image(tmp.file("a.pgm"));
    CHECK(img.width == 2);
    CHECK(img.height == 1);
    CHECK(img.channels == 1);
    CHECK(img.data[0] == 0.0);
    CHECK(img.data[1] == 1.0);
}

TEST_CASE("load P6: 1x1 gray pixel") {
    testutil::TempDir tmp("ppm_load");
    write_raw(tmp.file("a.ppm"), "P6\n1 1\n255\n", {128, 128, 128});
    Image img = load_image(tmp.file("a.ppm"));
    CHECK(img.channels == 3);
    for (int ch = 0; ch < 3; ++ch) CHECK(img.data[ch] == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("truncated payload reports the byte offset") {
    testutil::TempDir tmp("pgm_trunc");
    write_raw(tmp.file("bad.pgm"), "P5\n4 4\n255\n", {1, 2, 3, 4, 5, 6, 7, 8});
    CHECK_THROWS_WITH_AS(load_image(tmp.file("bad.pgm")),
                         doctest::Contains("truncated pixel data"), DataError);
    try {
        load_image(tmp.file("bad.pgm"));
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }
}

TEST_CASE("unsupported maxval and bad magic are rejected") {
    testutil::TempDir tmp("pgm_maxval");
    write_raw(tmp.file("m.pgm"), "P5\n1 1\n65535\n", {0, 0});
    CHECK_THROWS_AS(load_image(tmp.file("m.pgm")), DataError);
    write_raw(tmp.file("x.pgm"), "P7\n1 1\n255\n", {0});
    CHECK_THROWS_AS(load_image(tmp.file("x.pgm")), DataError);
}

TEST_CASE("header comments are accepted") {
    testutil::TempDir tmp("pgm_comment");
    write_raw(tmp.file("c.pgm"), "P5\n# a comment\n2 1\n255\n", {10, 20});
    Image img = load_image(tmp.file("c.pgm"));
    CHECK(img.width == 2);
}

TEST_CASE("save: 0.5 stores byte 128 (round half up)") {
    testutil::TempDir tmp("pgm_round");
    Image img(1, 1, 1, 0.5);
    save_image(img, tmp.file("r.pgm"));
    auto raw = read_file_bytes(tmp.file("r.pgm"));
    CHECK(raw.back() == 128);
}

TEST_CASE("save then load round-trips 8-bit-exact images") {
    testutil::TempDir tmp("pgm_rt");
    Image img(7, 5, 1);
    std::mt19937_64 rng(3);
    for (double& v : img.data) v = static_cast<double>(rng() % 256) / 255.0;
    save_image(img, tmp.file("rt.pgm"), ImageFileFormat::pgm);
    Image back = load_image(tmp.file("rt.pgm"), ImageFileFormat::pgm);
    REQUIRE(back.data.size() == img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == img.data[i]);
}

TEST_CASE("channel/format mismatch is an error") {
    testutil::TempDir tmp("pgm_mismatch");
    Image rgb(2, 2, 3, 0.25);
    CHECK_THROWS_AS(save_image(rgb, tmp.file("bad.pgm"), ImageFileFormat::pgm), Error);
}

TEST_CASE("bicubic: identity when dims are unchanged") {
    Image img = testutil::random_image(9, 6, 1, 5);
    Image out = bicubic_resample(img, 9, 6);
    for (size_t i = 0; i < img.data.size(); ++i) CHECK(out.data[i] == img.data[i]);
}

TEST_CASE("bicubic: constants preserved exactly for any size") {
    for (double value : {0.0, 0.3, 1.0}) {
        Image img = testutil::constant_image(5, 4, 3, value);
        for (auto [ow, oh] : {std::pair{10u, 8u}, {3u, 2u}, {17u, 1u}}) {
            Image out = bicubic_resample(img, ow, oh);
            for (double v : out.data) CHECK(v == value);
        }
    }
}

TEST_CASE("bicubic: 2x upsample of a ramp matches the Catmull-Rom interpolant") {
    // data[i] = i/7; the oracle evaluates the interpolating polynomial
    // directly. Catmull-Rom reproduces degree-1 signals exactly away from
    // clamped edges.
    Image img(8, 1, 1);
    for (uint32_t i = 0; i < 8; ++i) img.data[i] = i / 7.0;
    Image out = bicubic_resample(img, 16, 1);

    auto kernel = [](double t) {
        t = std::abs(t);
        if (t <= 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
        if (t < 2.0) return -0.5 * (t * t * t - 5.0 * t * t + 8.0 * t - 4.0);
        return 0.0;
    };
    for (uint32_t o = 0; o < 16; ++o) {
        double pos = (o + 0.5) * 0.5 - 0.5;
        long base = static_cast<long>(std::floor(pos));
        double expected = 0.0;
        for (long tap = base - 1; tap <= base + 2; ++tap) {
            long idx = std::clamp(tap, 0l, 7l);
            expected += kernel(pos - tap) * (idx / 7.0);
        }
        expected = std::clamp(expected, 0.0, 1.0);
        CHECK(out.data[o] == doctest::Approx(expected).epsilon(1e-12));
        // Interior samples sit on the ramp itself.
        if (pos >= 1.0 && pos <= 6.0) CHECK(out.data[o] == doctest::Approx(pos / 7.0));
    }
}

TEST_CASE("bicubic: down-then-up keeps dims and range") {
    Image img = testutil::natural_image(32, 24, 1, 9);
    Image down = bicubic_resample(img, 16, 12);
    Image up = bicubic_resample(down, 32, 24);
    CHECK(up.width == img.width);
    CHECK(up.height == img.height);
    for (double v : up.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("video: frame directory loads in name order") {
    testutil::TempDir tmp("vid_dir");
    Image f0 = testutil::constant_image(4, 4, 1, 0.1);
    Image f1 = testutil::constant_image(4, 4, 1, 0.9);
    save_image(f0, tmp.file("f000.pgm"));
    save_image(f1, tmp.file("f001.pgm"));
    VideoSequence video = load_video(tmp.dir());
    REQUIRE(video.frames.size() == 2);
    CHECK(video.frames[0].data[0] == doctest::Approx(0.1).epsilon(0.01));
    CHECK(video.frames[1].data[0] == doctest::Approx(0.9).epsilon(0.01));
}

TEST_CASE("video: mixed dimensions rejected") {
    testutil::TempDir tmp("vid_mixed");
    save_image(testutil::constant_image(4, 4, 1, 0.1), tmp.file("f000.pgm"));
    save_image(testutil::constant_image(8, 8, 1, 0.2), tmp.file("f001.pgm"));
    CHECK_THROWS_AS(load_video(tmp.dir()), DataError);
}

TEST_CASE("video: y4m round trip, C444 and Cmono") {
    testutil::TempDir tmp("y4m");
    for (uint32_t channels : {1u, 3u}) {
        VideoSequence video;
        video.fps_num = 30;
        video.fps_den = 1;
        for (int t = 0; t < 3; ++t)
            video.frames.push_back(testutil::random_image(6, 4, channels, 100 + t));
        std::string path = tmp.file("v" + std::to_string(channels) + ".y4m");
        save_video(video, path);
        VideoSequence back = load_video(path);
        REQUIRE(back.frames.size() == 3);
        CHECK(back.fps_num == 30);
        CHECK(back.frames[0].channels == channels);
        // 8-bit exactness after one quantization pass
        save_video(back, path);
        VideoSequence again = load_video(path);
        for (size_t t = 0; t < 3; ++t)
            for (size_t i = 0; i < back.frames[t].data.size(); ++i)
                CHECK(again.frames[t].data[i] == back.frames[t].data[i]);
    }
}

TEST_CASE("video: single-frame y4m is a 1-frame sequence") {
    testutil::TempDir tmp("y4m_single");
    VideoSequence video;
    video.frames.push_back(testutil::constant_image(4, 2, 1, 0.5));
    save_video(video, tmp.file("one.y4m"));
    VideoSequence back = load_video(tmp.file("one.y4m"));
    CHECK(back.frames.size() == 1);
}

TEST_CASE("video: unsupported y4m colorspace rejected") {
    testutil::TempDir tmp("y4m_bad");
    std::string header = "YUV4MPEG2 W4 H2 F25:1 C420\nFRAME\n";
    std::vector<uint8_t> payload(4 * 2 * 3 / 2, 0);
    write_raw(tmp.file("bad.y4m"), header, payload);
    CHECK_THROWS_AS(load_video(tmp.file("bad.y4m")), DataError);
}
