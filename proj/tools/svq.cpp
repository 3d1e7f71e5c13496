// svq: codebook-index image/video codec command line tool.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "svq/codebook.hpp"
#include "svq/container.hpp"
#include "svq/errors.hpp"
#include "svq/image.hpp"
#include "svq/metrics.hpp"
#include "svq/pipeline.hpp"
#include "svq/rdcsv.hpp"
#include "svq/transform.hpp"

namespace {

namespace fs = std::filesystem;

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<double> split_doubles(const std::string& s, const char* what) {
    std::vector<double> out;
    for (const std::string& item : split_list(s)) {
        try {
            size_t used = 0;
            double v = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw svq::Error(std::string("invalid ") + what + " value '" + item + "'");
        }
    }
    if (out.empty()) throw svq::Error(std::string("empty ") + what + " list");
    return out;
}

bool is_video_path(const std::string& path) {
    return fs::is_directory(path) || path.ends_with(".y4m");
}

// Block size follows from the codebook dimension: d = p*p*c.
uint32_t infer_block_size(uint32_t dim, uint32_t channels) {
    if (dim % channels != 0)
        throw svq::DataError("codebook dimension " + std::to_string(dim) +
                             " is not divisible by channel count " + std::to_string(channels));
    uint32_t per_chan = dim / channels;
    auto p = static_cast<uint32_t>(std::lround(std::sqrt(static_cast<double>(per_chan))));
    if (p == 0 || p * p != per_chan)
        throw svq::DataError("codebook dimension " + std::to_string(dim) +
                             " does not correspond to a square block");
    return p;
}

struct EncodeArgs {
    std::string input;
    std::string codebooks;
    std::string output;
    double alpha = 1.0;
    double tau = 1.0;
    double rho = 0.9;
    uint32_t lq_s = 2;
    double lq_q = 0.05;
    std::string lq_external;
    uint64_t lq_bits = 0;
    uint32_t tile_limit = 1080;
};

svq::EncodeConfig build_config(const EncodeArgs& args, const svq::CodebookBank& bank,
                               uint32_t channels) {
    svq::EncodeConfig cfg;
    cfg.spec.block_size = infer_block_size(bank.dim(), channels);
    cfg.spec.channels = channels;
    cfg.alpha = args.alpha;
    cfg.tau = args.tau;
    cfg.delta_threshold = args.rho;
    cfg.tile_limit = args.tile_limit;
    if (!args.lq_external.empty()) {
        cfg.use_external_lq = true;
        cfg.external_lq_path = args.lq_external;
        cfg.external_lq_bits = args.lq_bits;
    } else {
        cfg.lq_quality.downsample = args.lq_s;
        cfg.lq_quality.quant_step = args.lq_q;
    }
    return cfg;
}

int cmd_train(const std::string& images_dir, uint32_t n_k, uint64_t seed, uint32_t iters,
              uint32_t block_size, const std::string& id, const std::string& out_path) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(images_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.ends_with(".pgm") || name.ends_with(".ppm"))
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw svq::IoError("no .pgm/.ppm images in " + images_dir);

    svq::TransformSpec spec;
    spec.block_size = block_size;
    std::vector<double> samples;
    uint32_t channels = 0;
    for (const std::string& f : files) {
        svq::Image img = svq::load_image(f);
        if (channels == 0) {
            channels = img.channels;
            spec.channels = channels;
        } else if (img.channels != channels) {
            throw svq::DataError(f + ": training images must share the channel count");
        }
        svq::LatentGrid lat = svq::analyze(img, spec);
        samples.insert(samples.end(), lat.data.begin(), lat.data.end());
    }

    svq::Codebook book =
        svq::train_codebook(samples, spec.latent_dim(), n_k, seed, iters);
    book.id = id.empty() ? fs::path(out_path).stem().string() : id;
    svq::save_codebook(book, out_path);
    std::cout << "trained codebook '" << book.id << "': n_k=" << book.n_k
              << " d=" << book.d << " from " << samples.size() / spec.latent_dim()
              << " samples (" << files.size() << " images)\n";
    return 0;
}

int cmd_encode(const EncodeArgs& args) {
    svq::CodebookBank bank = svq::load_bank(split_list(args.codebooks));
    svq::Container c;
    if (is_video_path(args.input)) {
        svq::VideoSequence video = svq::load_video(args.input);
        c = svq::encode_video(video, bank, build_config(args, bank, video.frames.front().channels));
    } else {
        svq::Image img = svq::load_image(args.input);
        c = svq::encode_image(img, bank, build_config(args, bank, img.channels));
    }
    svq::write_container(c, args.output);
    svq::RateReport report = svq::rate_report(c);
    std::cout << "wrote " << args.output << ": bpp=" << shortest(report.bpp)
              << " b_c=" << shortest(report.index_bits)
              << " b_LQ=" << shortest(report.lq_bits) << "\n";
    return 0;
}

int cmd_decode(const std::string& input, const std::string& codebooks,
               const std::string& output, const std::string& theta_path) {
    svq::Container c = svq::read_container(input);
    svq::CodebookBank bank = svq::load_bank(split_list(codebooks));
    svq::ThetaParams theta;
    if (!theta_path.empty()) theta = svq::load_theta(theta_path);
    if (c.mode == svq::ContainerMode::image) {
        svq::Image img = svq::decode_image(c, bank, theta);
        svq::save_image(img, output);
    } else {
        svq::VideoSequence video = svq::decode_video(c, bank, theta);
        svq::save_video(video, output);
    }
    return 0;
}

svq::Image load_any_single(const std::string& path) {
    if (is_video_path(path))
        throw svq::Error("metrics expects still images; got a video: " + path);
    return svq::load_image(path);
}

int cmd_metrics(const std::string& ref, const std::string& test) {
    svq::Image a = load_any_single(ref);
    svq::Image b = load_any_single(test);
    std::cout << "psnr_db: " << shortest(svq::psnr(a, b)) << "\n";
    std::cout << "ssim: " << shortest(svq::ssim(a, b)) << "\n";
    return 0;
}

int cmd_stats(const std::string& input) {
    svq::Container c = svq::read_container(input);
    svq::RateReport report = svq::rate_report(c);
    std::cout << "mode: " << (c.mode == svq::ContainerMode::image ? "image" : "video") << "\n";
    std::cout << "width: " << c.width << "\n";
    std::cout << "height: " << c.height << "\n";
    std::cout << "channels: " << c.channels << "\n";
    std::cout << "frames: " << c.frames.size() << "\n";
    std::cout << "block_size: " << c.block_size << "\n";
    std::cout << "codebooks: " << c.books.size() << "\n";
    std::cout << "alpha: " << shortest(c.alpha) << "\n";
    std::cout << "tau: " << shortest(c.tau) << "\n";
    std::cout << "b_c: " << shortest(report.index_bits) << "\n";
    std::cout << "b_LQ: " << shortest(report.lq_bits) << "\n";
    std::cout << "B: " << shortest(report.total_bits) << "\n";
    std::cout << "bpp: " << shortest(report.bpp) << "\n";
    if (c.mode == svq::ContainerMode::video) {
        svq::UnchangedReport unchanged = svq::unchanged_fraction_from_container(c);
        for (size_t t = 0; t < unchanged.per_transition.size(); ++t)
            std::cout << "unchanged_fraction[" << t
                      << "]: " << shortest(unchanged.per_transition[t]) << "\n";
        std::cout << "unchanged_fraction_mean: " << shortest(unchanged.mean) << "\n";
    }
    return 0;
}

int cmd_rd_sweep(const std::string& input, const std::string& codebooks,
                 const std::string& alphas_list, const std::string& qs_list,
                 uint32_t lq_s, const std::string& out_path) {
    std::vector<double> alphas = split_doubles(alphas_list, "alpha");
    std::vector<double> qs = split_doubles(qs_list, "lq-q");
    svq::CodebookBank bank = svq::load_bank(split_list(codebooks));

    bool video_input = is_video_path(input);
    svq::VideoSequence video;
    svq::Image image;
    uint32_t channels;
    if (video_input) {
        video = svq::load_video(input);
        channels = video.frames.front().channels;
    } else {
        image = svq::load_image(input);
        channels = image.channels;
    }

    std::vector<svq::RdPoint> points;
    for (double alpha : alphas) {
        for (double q : qs) {
            EncodeArgs args;
            args.alpha = alpha;
            args.lq_s = lq_s;
            args.lq_q = q;
            svq::EncodeConfig cfg = build_config(args, bank, channels);

            svq::RdPoint point;
            point.alpha = alpha;
            point.lq_s = lq_s;
            point.lq_q = q;
            char label[64];
            std::snprintf(label, sizeof label, "a%.2f_q%g_s%u", alpha, q, lq_s);
            point.label = label;

            svq::Container c;
            if (video_input) {
                c = svq::encode_video(video, bank, cfg);
                svq::VideoSequence decoded = svq::decode_video(c, bank);
                double psnr_sum = 0, ssim_sum = 0;
                for (size_t t = 0; t < video.frames.size(); ++t) {
                    psnr_sum += svq::psnr(video.frames[t], decoded.frames[t]);
                    ssim_sum += svq::ssim(video.frames[t], decoded.frames[t]);
                }
                point.psnr_db = psnr_sum / static_cast<double>(video.frames.size());
                point.ssim = ssim_sum / static_cast<double>(video.frames.size());
            } else {
                c = svq::encode_image(image, bank, cfg);
                svq::Image decoded = svq::decode_image(c, bank);
                point.psnr_db = svq::psnr(image, decoded);
                point.ssim = svq::ssim(image, decoded);
            }
            svq::RateReport report = svq::rate_report(c);
            point.index_bits = report.index_bits;
            point.lq_bits = report.lq_bits;
            point.bpp = report.bpp;
            points.push_back(std::move(point));
        }
    }
    svq::emit_rd_csv(points, out_path);
    std::cout << "wrote " << out_path << " (" << points.size() << " points)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"codebook-index image/video codec"};
    app.require_subcommand(1);

    // train-codebook
    auto* train = app.add_subcommand("train-codebook", "train a codebook from images");
    std::string train_dir, train_out, train_id;
    uint32_t train_nk = 256, train_iters = 25, train_p = 8;
    uint64_t train_seed = 0;
    bool dim_from_spec = true;
    train->add_option("--images", train_dir, "directory of .pgm/.ppm training images")
        ->required();
    train->add_option("--nk", train_nk, "codeword count")->required();
    train->add_flag("--dim-from-spec", dim_from_spec,
                    "derive latent dimension from block size and image channels (always on)");
    train->add_option("--seed", train_seed, "RNG seed");
    train->add_option("--iters", train_iters, "Lloyd iterations");
    train->add_option("--block-size", train_p, "transform block size p (d = p*p*c)");
    train->add_option("--id", train_id, "codebook id (default: output stem)");
    train->add_option("--out", train_out, "output .svqc path")->required();

    // encode
    auto* encode = app.add_subcommand("encode", "encode an image or video");
    EncodeArgs enc;
    encode->add_option("--input", enc.input, "image (.pgm/.ppm), .y4m, or frame directory")
        ->required();
    encode->add_option("--codebooks", enc.codebooks, "comma-separated .svqc files")->required();
    encode->add_option("--alpha", enc.alpha, "control strength in [0,1]");
    encode->add_option("--tau", enc.tau, "weight predictor temperature");
    encode->add_option("--rho", enc.rho, "full-frame fallback threshold in (0,1]");
    encode->add_option("--lq-s", enc.lq_s, "LQ downsample factor {1,2,4}");
    encode->add_option("--lq-q", enc.lq_q, "LQ quantization step");
    encode->add_option("--lq-external", enc.lq_external,
                       "external LQ image (or frame directory for video)");
    encode->add_option("--lq-bits", enc.lq_bits, "external LQ stream size in bits (per frame)");
    encode->add_option("--tile-limit", enc.tile_limit, "max tile side in pixels");
    encode->add_option("--out", enc.output, "output .svq container")->required();

    // decode
    auto* decode = app.add_subcommand("decode", "decode a container");
    std::string dec_input, dec_codebooks, dec_output, dec_theta;
    decode->add_option("--input", dec_input, "input .svq container")->required();
    decode->add_option("--codebooks", dec_codebooks, "comma-separated .svqc files")->required();
    decode->add_option("--out", dec_output, "output image, .y4m, or frame directory")
        ->required();
    decode->add_option("--theta", dec_theta, "optional theta parameter file (48 bytes)");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "print PSNR/SSIM between two images");
    std::string met_ref, met_test;
    metrics->add_option("--ref", met_ref, "reference image")->required();
    metrics->add_option("--test", met_test, "test image")->required();

    // stats
    auto* stats = app.add_subcommand("stats", "print rate statistics for a container");
    std::string stats_input;
    stats->add_option("--input", stats_input, "input .svq container")->required();

    // rd-sweep
    auto* sweep = app.add_subcommand("rd-sweep", "rate-distortion sweep, CSV output");
    std::string sw_input, sw_codebooks, sw_alphas, sw_qs, sw_out;
    uint32_t sw_s = 2;
    sweep->add_option("--input", sw_input, "input image or video")->required();
    sweep->add_option("--codebooks", sw_codebooks, "comma-separated .svqc files")->required();
    sweep->add_option("--alphas", sw_alphas, "comma-separated alpha values")->required();
    sweep->add_option("--lq-qs", sw_qs, "comma-separated LQ quantization steps")->required();
    sweep->add_option("--lq-s", sw_s, "LQ downsample factor for all points");
    sweep->add_option("--out", sw_out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (train->parsed())
            return cmd_train(train_dir, train_nk, train_seed, train_iters, train_p, train_id,
                             train_out);
        if (encode->parsed()) return cmd_encode(enc);
        if (decode->parsed()) return cmd_decode(dec_input, dec_codebooks, dec_output, dec_theta);
        if (metrics->parsed()) return cmd_metrics(met_ref, met_test);
        if (stats->parsed()) return cmd_stats(stats_input);
        if (sweep->parsed())
            return cmd_rd_sweep(sw_input, sw_codebooks, sw_alphas, sw_qs, sw_s, sw_out);
    } catch (const svq::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
