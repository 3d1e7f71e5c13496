#include "svq/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "svq/bytes.hpp"
#include "svq/entropy.hpp"
#include "svq/errors.hpp"
#include "svq/metrics.hpp"
#include "svq/parallel.hpp"

namespace svq {

namespace {

// Analysis over block-aligned tiles. Blocks never straddle tiles and edge
// padding replicates the same image pixels either way, so the result is
// bit-identical to whole-image analysis for every tile limit; tiles bound
// the working-set size and parallelize independently.
LatentGrid analyze_tiled(const Image& img, const TransformSpec& spec, uint32_t tile_limit) {
    const uint32_t p = spec.block_size;
    const uint32_t blocks_per_tile = std::max(1u, tile_limit / p);
    LatentGrid lat(spec.grid_w(img.width), spec.grid_h(img.height), spec.latent_dim());

    uint32_t tiles_x = (lat.u + blocks_per_tile - 1) / blocks_per_tile;
    uint32_t tiles_y = (lat.v + blocks_per_tile - 1) / blocks_per_tile;
    for (uint32_t ty = 0; ty < tiles_y; ++ty) {
        for (uint32_t tx = 0; tx < tiles_x; ++tx) {
            uint32_t gx0 = tx * blocks_per_tile;
            uint32_t gy0 = ty * blocks_per_tile;
            uint32_t gx1 = std::min(gx0 + blocks_per_tile, lat.u);
            uint32_t gy1 = std::min(gy0 + blocks_per_tile, lat.v);
            uint32_t px0 = gx0 * p, py0 = gy0 * p;
            uint32_t px1 = std::min(gx1 * p, img.width);
            uint32_t py1 = std::min(gy1 * p, img.height);

            Image tile(px1 - px0, py1 - py0, img.channels);
            for (uint32_t y = py0; y < py1; ++y)
                for (uint32_t x = px0; x < px1; ++x)
                    for (uint32_t ch = 0; ch < img.channels; ++ch)
                        tile.at(x - px0, y - py0, ch) = img.at(x, y, ch);

            LatentGrid part = analyze(tile, spec);
            for (uint32_t gy = gy0; gy < gy1; ++gy)
                for (uint32_t gx = gx0; gx < gx1; ++gx) {
                    const double* src = part.cell((gy - gy0) * part.u + (gx - gx0));
                    std::copy_n(src, lat.d, lat.cell(static_cast<size_t>(gy) * lat.u + gx));
                }
        }
    }
    return lat;
}

std::vector<Permutation> bank_permutations(const CodebookBank& bank) {
    std::vector<Permutation> perms;
    perms.reserve(bank.books.size());
    for (const Codebook& book : bank.books)
        perms.push_back(build_frequency_permutation(book.freq));
    return perms;
}

// Rank grids for one frame: quantize against every book, then map indices
// to frequency ranks.
std::vector<IndexGrid> frame_rank_grids(const LatentGrid& lat, const CodebookBank& bank,
                                        const std::vector<Permutation>& perms) {
    std::vector<IndexGrid> ranks;
    ranks.reserve(bank.books.size());
    for (size_t k = 0; k < bank.books.size(); ++k) {
        IndexGrid grid = quantize_grid(lat, bank.books[k]);
        for (uint32_t& value : grid.indices) value = perms[k].forward[value];
        ranks.push_back(std::move(grid));
    }
    return ranks;
}

IndexStreamRecord make_full_record(const IndexGrid& ranks, uint32_t n_k) {
    ByteWriter w;
    write_rank_stream(w, ranks.indices, n_k);
    IndexStreamRecord rec;
    rec.rank_stream = w.take();
    rec.bits = 8 * rec.rank_stream.size();
    return rec;
}

IndexStreamRecord make_delta_record(const IndexDelta& delta, uint32_t n_k) {
    IndexStreamRecord rec;
    rec.delta_positions = delta.positions;
    if (!delta.positions.empty()) {
        ByteWriter w;
        write_rank_stream(w, delta.new_ranks, n_k);
        rec.rank_stream = w.take();
    }
    rec.bits = 32ull * rec.delta_positions.size() + 8 * rec.rank_stream.size();
    return rec;
}

LqPayload make_lq_payload(const Image& frame, const EncodeConfig& cfg,
                          const std::string& external_path) {
    if (cfg.use_external_lq)
        return import_external_lq(external_path, cfg.external_lq_bits);
    return lq_encode(frame, cfg.lq_quality);
}

std::vector<CodebookRef> make_book_refs(const CodebookBank& bank) {
    std::vector<CodebookRef> refs;
    refs.reserve(bank.books.size());
    for (const Codebook& book : bank.books)
        refs.push_back({book.id, book.n_k, codebook_content_hash(book)});
    return refs;
}

// Aligns the user's bank with the container's codebook references; refuses
// to decode against a different codebook than the encoder used.
void check_bank_against(const Container& c, const CodebookBank& bank) {
    validate_bank(bank);
    if (bank.books.size() != c.books.size())
        throw DataError("decode: container expects " + std::to_string(c.books.size()) +
                        " codebooks, got " + std::to_string(bank.books.size()));
    for (size_t k = 0; k < c.books.size(); ++k) {
        const CodebookRef& ref = c.books[k];
        const Codebook& book = bank.books[k];
        if (book.id != ref.id)
            throw DataError("decode: codebook " + std::to_string(k) + " id '" + book.id +
                            "' does not match container's '" + ref.id + "'");
        if (book.n_k != ref.n_k)
            throw DataError("decode: codebook '" + book.id + "' size mismatch");
        if (codebook_content_hash(book) != ref.content_hash)
            throw DataError("decode: codebook '" + book.id +
                            "' content hash mismatch; refusing to decode");
    }
    TransformSpec spec{c.block_size, c.channels, c.basis};
    if (bank.dim() != spec.latent_dim())
        throw DataError("decode: codebook dimension does not match container transform");
}

// Reconstructs one frame image from its rank grids.
Image decode_frame(const Container& c, const CodebookBank& bank,
                   const std::vector<IndexGrid>& rank_grids,
                   const std::vector<Permutation>& perms, const LqPayload& lq,
                   const ThetaParams& theta) {
    TransformSpec spec{c.block_size, c.channels, c.basis};
    const uint32_t K = static_cast<uint32_t>(bank.books.size());

    std::vector<LatentGrid> quantized(K);
    for (uint32_t k = 0; k < K; ++k) {
        IndexGrid indices = rank_grids[k];
        for (uint32_t& value : indices.indices) {
            if (value >= perms[k].size())
                throw DataError("decode: rank out of range for codebook " + std::to_string(k));
            value = perms[k].inverse[value];
        }
        quantized[k] = dequantize_grid(indices, bank.books[k]);
    }

    Image lq_img = lq_decode(lq, c.width, c.height);
    if (lq_img.channels != c.channels)
        throw DataError("decode: LQ substitute channels do not match container");
    LatentGrid flq = analyze(lq_img, spec);

    LatentGrid combined;
    if (K == 1) {
        combined = std::move(quantized[0]);
    } else {
        WeightMap weights = predict_weights(flq, bank, c.tau);
        combined = combine_weighted(quantized, weights);
    }

    LatentGrid modulated = cft_modulate(combined, flq, CftParams{c.alpha, theta});
    return synthesize(modulated, spec, c.width, c.height);
}

std::vector<std::string> external_video_frames(const std::string& dir, size_t frame_count) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw IoError("external LQ for video must be a directory of frames: " + dir);
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.size() < 2 || name[0] != 'f') continue;
        if (name.ends_with(".pgm") || name.ends_with(".ppm")) names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    if (names.size() != frame_count)
        throw DataError("external LQ directory has " + std::to_string(names.size()) +
                        " frames, video has " + std::to_string(frame_count));
    std::vector<std::string> paths;
    paths.reserve(names.size());
    for (const std::string& name : names) paths.push_back((fs::path(dir) / name).string());
    return paths;
}

} // namespace

void validate_encode_config(const EncodeConfig& cfg, const CodebookBank& bank) {
    validate_transform_spec(cfg.spec);
    validate_bank(bank);
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0))
        throw Error("encode config: alpha must be in [0,1]");
    if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau))
        throw Error("encode config: tau must be positive");
    if (!(cfg.delta_threshold > 0.0 && cfg.delta_threshold <= 1.0))
        throw Error("encode config: delta threshold must be in (0,1]");
    if (cfg.tile_limit == 0) throw Error("encode config: tile limit must be >= 1");
    if (bank.dim() != cfg.spec.latent_dim())
        throw Error("encode config: codebook dimension " + std::to_string(bank.dim()) +
                    " does not match transform dimension " +
                    std::to_string(cfg.spec.latent_dim()));
    if (!cfg.use_external_lq) validate_lq_quality(cfg.lq_quality);
}

IndexDelta diff_indices(const IndexGrid& prev, const IndexGrid& cur) {
    if (prev.u != cur.u || prev.v != cur.v)
        throw Error("diff_indices: grid dimensions differ");
    IndexDelta delta;
    for (size_t l = 0; l < cur.cells(); ++l) {
        if (prev.indices[l] != cur.indices[l]) {
            delta.positions.push_back(static_cast<uint32_t>(l));
            delta.new_ranks.push_back(cur.indices[l]);
        }
    }
    return delta;
}

IndexGrid apply_index_delta(const IndexGrid& prev, const IndexDelta& delta) {
    if (delta.positions.size() != delta.new_ranks.size())
        throw Error("apply_index_delta: malformed delta");
    IndexGrid out = prev;
    for (size_t i = 0; i < delta.positions.size(); ++i) {
        uint32_t pos = delta.positions[i];
        if (pos >= out.cells())
            throw DataError("apply_index_delta: position out of range");
        out.indices[pos] = delta.new_ranks[i];
    }
    return out;
}

Container encode_image(const Image& img, const CodebookBank& bank, const EncodeConfig& cfg) {
    validate_image(img);
    validate_encode_config(cfg, bank);
    if (img.channels != cfg.spec.channels)
        throw Error("encode_image: image channels do not match transform spec");
    if (img.width < cfg.spec.block_size || img.height < cfg.spec.block_size)
        throw Error("encode_image: image dimensions must be at least the block size");

    Container c;
    c.mode = ContainerMode::image;
    c.width = img.width;
    c.height = img.height;
    c.channels = img.channels;
    c.block_size = cfg.spec.block_size;
    c.basis = cfg.spec.basis;
    c.alpha = cfg.alpha;
    c.tau = cfg.tau;
    c.books = make_book_refs(bank);

    std::vector<Permutation> perms = bank_permutations(bank);
    LatentGrid lat = analyze_tiled(img, cfg.spec, cfg.tile_limit);
    std::vector<IndexGrid> ranks = frame_rank_grids(lat, bank, perms);

    FrameRecord frame;
    frame.kind = FrameKind::full;
    for (size_t k = 0; k < bank.books.size(); ++k)
        frame.books.push_back(make_full_record(ranks[k], bank.books[k].n_k));
    frame.lq = make_lq_payload(img, cfg, cfg.external_lq_path);
    c.frames.push_back(std::move(frame));

    validate_container(c);
    return c;
}

Image decode_image(const Container& c, const CodebookBank& bank, const ThetaParams& theta) {
    validate_container(c);
    if (c.mode != ContainerMode::image)
        throw Error("decode_image: container holds a video");
    check_bank_against(c, bank);

    std::vector<std::vector<IndexGrid>> ranks = decode_rank_grids(c);
    std::vector<Permutation> perms = bank_permutations(bank);
    return decode_frame(c, bank, ranks.front(), perms, c.frames.front().lq, theta);
}

Container encode_video(const VideoSequence& video, const CodebookBank& bank,
                       const EncodeConfig& cfg) {
    validate_video(video);
    validate_encode_config(cfg, bank);
    const Image& f0 = video.frames.front();
    if (f0.channels != cfg.spec.channels)
        throw Error("encode_video: frame channels do not match transform spec");
    if (f0.width < cfg.spec.block_size || f0.height < cfg.spec.block_size)
        throw Error("encode_video: frame dimensions must be at least the block size");

    const size_t T = video.frames.size();
    const uint32_t K = static_cast<uint32_t>(bank.books.size());

    Container c;
    c.mode = T == 1 ? ContainerMode::image : ContainerMode::video;
    c.width = f0.width;
    c.height = f0.height;
    c.channels = f0.channels;
    c.block_size = cfg.spec.block_size;
    c.basis = cfg.spec.basis;
    c.alpha = cfg.alpha;
    c.tau = cfg.tau;
    c.frame_rate = video.frame_rate();
    c.books = make_book_refs(bank);

    std::vector<std::string> external_paths;
    if (cfg.use_external_lq) {
        if (T == 1) {
            external_paths.push_back(cfg.external_lq_path);
        } else {
            external_paths = external_video_frames(cfg.external_lq_path, T);
        }
    }

    // Quantization per frame is independent; the delta chain below is
    // sequential but cheap.
    std::vector<Permutation> perms = bank_permutations(bank);
    std::vector<std::vector<IndexGrid>> ranks(T);
    parallel_for(T, [&](size_t t) {
        validate_image(video.frames[t]);
        LatentGrid lat = analyze_tiled(video.frames[t], cfg.spec, cfg.tile_limit);
        ranks[t] = frame_rank_grids(lat, bank, perms);
    });

    const size_t cells = ranks[0][0].cells();
    for (size_t t = 0; t < T; ++t) {
        FrameRecord frame;
        if (t == 0) {
            frame.kind = FrameKind::full;
            for (uint32_t k = 0; k < K; ++k)
                frame.books.push_back(make_full_record(ranks[t][k], bank.books[k].n_k));
        } else {
            std::vector<IndexDelta> deltas(K);
            size_t changed = 0;
            for (uint32_t k = 0; k < K; ++k) {
                deltas[k] = diff_indices(ranks[t - 1][k], ranks[t][k]);
                changed += deltas[k].changed();
            }
            double fraction = static_cast<double>(changed) / (static_cast<double>(K) * cells);
            if (fraction > cfg.delta_threshold) {
                frame.kind = FrameKind::full;
                for (uint32_t k = 0; k < K; ++k)
                    frame.books.push_back(make_full_record(ranks[t][k], bank.books[k].n_k));
            } else {
                frame.kind = FrameKind::delta;
                for (uint32_t k = 0; k < K; ++k)
                    frame.books.push_back(make_delta_record(deltas[k], bank.books[k].n_k));
            }
        }
        frame.lq = make_lq_payload(video.frames[t], cfg,
                                   cfg.use_external_lq ? external_paths[t] : std::string());
        c.frames.push_back(std::move(frame));
    }

    validate_container(c);
    return c;
}

VideoSequence decode_video(const Container& c, const CodebookBank& bank,
                           const ThetaParams& theta) {
    validate_container(c);
    check_bank_against(c, bank);

    std::vector<std::vector<IndexGrid>> ranks = decode_rank_grids(c);
    std::vector<Permutation> perms = bank_permutations(bank);

    VideoSequence video;
    video.frames.resize(c.frames.size());
    if (c.frame_rate > 0.0) {
        video.fps_num = static_cast<uint32_t>(std::lround(c.frame_rate * 1000.0));
        video.fps_den = 1000;
    }
    parallel_for(c.frames.size(), [&](size_t t) {
        video.frames[t] = decode_frame(c, bank, ranks[t], perms, c.frames[t].lq, theta);
    });
    return video;
}

std::vector<std::vector<IndexGrid>> decode_rank_grids(const Container& c) {
    validate_container(c);
    const uint32_t u = c.grid_w();
    const uint32_t v = c.grid_h();
    const size_t cells = c.grid_cells();

    std::vector<std::vector<IndexGrid>> out;
    out.reserve(c.frames.size());
    for (size_t t = 0; t < c.frames.size(); ++t) {
        const FrameRecord& frame = c.frames[t];
        std::vector<IndexGrid> grids(c.books.size());
        for (size_t k = 0; k < c.books.size(); ++k) {
            const IndexStreamRecord& rec = frame.books[k];
            std::string label = "index stream (frame " + std::to_string(t) + ", book " +
                                std::to_string(k) + ")";
            if (frame.kind == FrameKind::full) {
                ByteReader r(rec.rank_stream, label);
                std::vector<uint32_t> ranks =
                    read_rank_stream(r, c.books[k].n_k, cells, label.c_str());
                if (!r.at_end()) r.fail("trailing bytes");
                IndexGrid grid(u, v);
                grid.indices = std::move(ranks);
                grids[k] = std::move(grid);
            } else {
                IndexDelta delta;
                delta.positions = rec.delta_positions;
                if (!rec.delta_positions.empty()) {
                    ByteReader r(rec.rank_stream, label);
                    delta.new_ranks = read_rank_stream(r, c.books[k].n_k,
                                                       rec.delta_positions.size(),
                                                       label.c_str());
                    if (!r.at_end()) r.fail("trailing bytes");
                }
                grids[k] = apply_index_delta(out.back()[k], delta);
            }
            for (uint32_t rank : grids[k].indices)
                if (rank >= c.books[k].n_k)
                    throw DataError(label + ": rank out of range");
        }
        out.push_back(std::move(grids));
    }
    return out;
}

UnchangedReport unchanged_fraction(const VideoSequence& video, const CodebookBank& bank,
                                   const EncodeConfig& cfg) {
    validate_video(video);
    validate_encode_config(cfg, bank);
    if (video.frames.size() < 2)
        throw Error("unchanged_fraction: need at least 2 frames");

    const size_t T = video.frames.size();
    std::vector<Permutation> perms = bank_permutations(bank);
    std::vector<std::vector<IndexGrid>> ranks(T);
    parallel_for(T, [&](size_t t) {
        LatentGrid lat = analyze_tiled(video.frames[t], cfg.spec, cfg.tile_limit);
        ranks[t] = frame_rank_grids(lat, bank, perms);
    });

    UnchangedReport report;
    const double slots =
        static_cast<double>(ranks[0][0].cells()) * static_cast<double>(bank.books.size());
    for (size_t t = 1; t < T; ++t) {
        size_t same = 0;
        for (size_t k = 0; k < bank.books.size(); ++k)
            for (size_t l = 0; l < ranks[t][k].cells(); ++l)
                if (ranks[t][k].indices[l] == ranks[t - 1][k].indices[l]) ++same;
        report.per_transition.push_back(static_cast<double>(same) / slots);
    }
    double sum = 0.0;
    for (double f : report.per_transition) sum += f;
    report.mean = sum / static_cast<double>(report.per_transition.size());
    return report;
}

UnchangedReport unchanged_fraction_from_container(const Container& c) {
    if (c.frames.size() < 2)
        throw Error("unchanged_fraction: need at least 2 frames");
    std::vector<std::vector<IndexGrid>> ranks = decode_rank_grids(c);

    UnchangedReport report;
    const double slots =
        static_cast<double>(c.grid_cells()) * static_cast<double>(c.books.size());
    for (size_t t = 1; t < ranks.size(); ++t) {
        size_t same = 0;
        for (size_t k = 0; k < c.books.size(); ++k)
            for (size_t l = 0; l < ranks[t][k].cells(); ++l)
                if (ranks[t][k].indices[l] == ranks[t - 1][k].indices[l]) ++same;
        report.per_transition.push_back(static_cast<double>(same) / slots);
    }
    double sum = 0.0;
    for (double f : report.per_transition) sum += f;
    report.mean = sum / static_cast<double>(report.per_transition.size());
    return report;
}

} // namespace svq
