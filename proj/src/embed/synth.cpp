#include "pvvtt/embed/synth.hpp"

#include <cmath>
#include <cstdio>

#include "pvvtt/core/random.hpp"
#include "pvvtt/errors.hpp"

namespace pvvtt {
namespace {

constexpr std::uint64_t kAnchorStream = 0xa11c;
constexpr std::uint64_t kVideoStream = 0x71de0;

std::string video_name(std::size_t cls, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "c%zu_v%03zu", cls, index);
    return buf;
}

} // namespace

std::vector<std::string> SynthOptions::class_names() const {
    auto names = mission_names;
    names.push_back("Normal");
    return names;
}

void SynthOptions::validate() const {
    if (mission_names.empty()) throw ConfigError("synth: need at least one mission");
    if (videos_per_class == 0) throw ConfigError("synth: videos_per_class must be positive");
    if (min_frames < 2 || max_frames < min_frames) {
        throw ConfigError("synth: frame range must satisfy 2 <= min <= max");
    }
    if (!(separability >= 0.0 && separability <= 1.0)) {
        throw ConfigError("synth: separability must lie in [0, 1]");
    }
    if (dim == 0) throw ConfigError("synth: dim must be positive");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
        throw ConfigError("synth: test_fraction must lie in [0, 1)");
    }
}

Tensor synth_anchors(const SynthOptions& opts) {
    const std::size_t classes = opts.M() + 1;
    Tensor anchors({classes, opts.dim});
    for (std::size_t c = 0; c < classes; ++c) {
        Rng rng(opts.seed, kAnchorStream + c);
        auto row = anchors.row(c);
        double norm2 = 0.0;
        for (double& x : row) {
            x = rng.normal();
            norm2 += x * x;
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& x : row) x *= inv;
    }
    return anchors;
}

SynthDataset synth_dataset(const SynthOptions& opts) {
    opts.validate();
    const Tensor anchors = synth_anchors(opts);
    const std::size_t M = opts.M();
    const int normal = static_cast<int>(M);
    const double amplitude = std::sqrt(static_cast<double>(opts.dim));
    const double sigma = (1.0 - opts.separability) / amplitude;

    SynthDataset ds;
    ds.class_names = opts.class_names();
    auto n_test = static_cast<std::size_t>(std::llround(opts.test_fraction * opts.videos_per_class));
    if (opts.test_fraction > 0.0 && n_test == 0 && opts.videos_per_class > 1) n_test = 1;
    if (n_test >= opts.videos_per_class) n_test = opts.videos_per_class - 1;

    for (std::size_t cls = 0; cls <= M; ++cls) {
        for (std::size_t i = 0; i < opts.videos_per_class; ++i) {
            Rng rng(opts.seed, kVideoStream + cls * 100003 + i);
            const std::size_t T =
                opts.min_frames + rng.below(opts.max_frames - opts.min_frames + 1);
            std::size_t begin = T;
            std::size_t end = T;
            if (static_cast<int>(cls) != normal) {
                const auto lo = static_cast<std::size_t>(std::ceil(0.3 * T));
                const auto hi = std::max(lo, static_cast<std::size_t>(std::floor(0.7 * T)));
                const std::size_t len = lo + rng.below(hi - lo + 1);
                begin = rng.below(T - len + 1);
                end = begin + len;
            }

            FrameEmbeddingSequence seq;
            seq.video_id = video_name(cls, i);
            seq.class_names = ds.class_names;
            seq.fps = opts.fps;
            seq.frames = Tensor({T, opts.dim});
            seq.labels.assign(T, normal);
            for (std::size_t t = 0; t < T; ++t) {
                const bool anomalous = t >= begin && t < end;
                const std::size_t src = anomalous ? cls : M;
                if (anomalous) seq.labels[t] = static_cast<int>(cls);
                auto anchor = anchors.row(src);
                auto row = seq.frames.row(t);
                for (std::size_t d = 0; d < opts.dim; ++d) {
                    const double noise = sigma > 0.0 ? sigma * rng.normal() : 0.0;
                    row[d] = static_cast<double>(static_cast<float>(amplitude * (anchor[d] + noise)));
                }
            }
            auto& split = i + n_test >= opts.videos_per_class ? ds.test : ds.train;
            split.push_back(std::move(seq));
        }
    }
    return ds;
}

std::filesystem::path write_dataset(const std::filesystem::path& dir, const SynthDataset& ds) {
    DatasetManifest manifest;
    manifest.class_names = ds.class_names;
    for (const auto& v : ds.train) {
        const std::string rel = "videos/" + v.video_id + ".pvtt";
        save_video(dir / rel, v);
        manifest.train.push_back(rel);
    }
    for (const auto& v : ds.test) {
        const std::string rel = "videos/" + v.video_id + ".pvtt";
        save_video(dir / rel, v);
        manifest.test.push_back(rel);
    }
    const auto path = dir / "manifest.json";
    save_manifest(path, manifest);
    return path;
}

} // namespace pvvtt
