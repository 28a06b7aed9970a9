#include <cmath>
#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "pvvtt/embed/encoder.hpp"
#include "pvvtt/embed/synth.hpp"
#include "pvvtt/embed/video_io.hpp"
#include "pvvtt/errors.hpp"
#include "pvvtt/net/chat.hpp"
#include "support.hpp"

namespace pvvtt {
namespace {

using testing::small_synth;
using testing::TempDir;

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

FrameEmbeddingSequence tiny_video() {
    FrameEmbeddingSequence seq;
    seq.video_id = "v1";
    seq.frames = Tensor::matrix(3, 4, {0.5, -1.0, 2.0, 0.25, 1, 2, 3, 4, -0.125, 0, 8, 16});
    seq.labels = {1, 0, 1};
    seq.class_names = {"Pervert", "Normal"};
    seq.fps = 30.0;
    return seq;
}

TEST(EmbeddingFile, HandBuiltBytesDecodeExactly) {
    std::vector<std::uint8_t> bytes{'P', 'V', 'T', 'T', 1, 0, 0, 0, 3, 0, 0, 0, 4, 0, 0, 0};
    const std::vector<float> values{0.5f, -1.0f, 2.0f, 0.25f, 1, 2, 3, 4, -0.125f, 0, 8, 16};
    for (float f : values) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
    const Tensor t = decode_embeddings(bytes, "hand");
    EXPECT_EQ(t, tiny_video().frames);
    EXPECT_EQ(encode_embeddings(t), bytes);
}

TEST(EmbeddingFile, BadMagicAndVersion) {
    auto bytes = encode_embeddings(tiny_video().frames);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(decode_embeddings(bad_magic, "f"), FormatError);
    auto bad_version = bytes;
    bad_version[4] = 9;
    EXPECT_THROW(decode_embeddings(bad_version, "f"), FormatError);
}

TEST(EmbeddingFile, TruncatedPayloadReportsExpectedAndActual) {
    // header says 10 frames, payload has 9
    Tensor frames({10, 2});
    auto bytes = encode_embeddings(frames);
    bytes.resize(bytes.size() - 2 * 4);
    try {
        decode_embeddings(bytes, "short");
        FAIL();
    } catch (const LengthError& e) {
        EXPECT_EQ(e.expected(), 16u + 10 * 2 * 4);
        EXPECT_EQ(e.actual(), 16u + 9 * 2 * 4);
    }
}

TEST(EmbeddingFile, SaveLoadRoundTripIsByteIdentical) {
    TempDir dir;
    const auto seq = tiny_video();
    save_video(dir / "a/v1.pvtt", seq);
    const auto loaded = load_video(dir / "a/v1.pvtt");
    EXPECT_EQ(loaded, seq);
    save_video(dir / "b/v1.pvtt", loaded);
    EXPECT_EQ(read_bytes(dir / "a/v1.pvtt"), read_bytes(dir / "b/v1.pvtt"));
    EXPECT_EQ(read_bytes(labels_path(dir / "a/v1.pvtt")), read_bytes(labels_path(dir / "b/v1.pvtt")));
    EXPECT_EQ(labels_path(dir / "a/v1.pvtt").filename(), "v1.labels.json");
}

TEST(EmbeddingFile, StrideKeepsEveryNthFrame) {
    TempDir dir;
    save_video(dir / "v.pvtt", tiny_video());
    const auto s = load_video(dir / "v.pvtt", 2);
    EXPECT_EQ(s.frame_count(), 2u);
    EXPECT_EQ(s.labels, (std::vector<int>{1, 1}));
    EXPECT_EQ(s.frames.row_tensor(1), tiny_video().frames.row_tensor(2));
    EXPECT_THROW(load_video(dir / "v.pvtt", 0), ConfigError);
}

TEST(EmbeddingFile, SidecarMismatchesAreRejected) {
    TempDir dir;
    save_video(dir / "v.pvtt", tiny_video());
    write_text_file(labels_path(dir / "v.pvtt"),
                    R"({"video_id": "v1", "class_names": ["Pervert", "Normal"], "labels": [0, 1], "fps": null})");
    EXPECT_THROW(load_video(dir / "v.pvtt"), ValidationError);
    write_text_file(labels_path(dir / "v.pvtt"),
                    R"({"video_id": "v1", "class_names": ["Pervert", "Normal"], "labels": [0, 1, 5], "fps": null})");
    EXPECT_THROW(load_video(dir / "v.pvtt"), ValidationError);
    std::filesystem::remove(labels_path(dir / "v.pvtt"));
    EXPECT_THROW(load_video(dir / "v.pvtt"), IoError);
    EXPECT_THROW(load_video(dir / "missing.pvtt"), IoError);
}

TEST(EmbeddingFile, VideoLabelIsTheAnomalyClass) {
    auto seq = tiny_video();
    EXPECT_EQ(seq.video_label(), 0);
    seq.labels = {1, 1, 1};
    EXPECT_EQ(seq.video_label(), 1);
    EXPECT_EQ(seq.normal_class(), 1);
}

TEST(PseudoEncoder, DeterministicUnitVectors) {
    PseudoEncoder enc(7, 64);
    const Tensor a = enc.encode_text("window");
    EXPECT_EQ(a, enc.encode_text("window"));
    EXPECT_EQ(a, PseudoEncoder(7, 64).encode_text("window"));
    EXPECT_NE(a, PseudoEncoder(8, 64).encode_text("window"));
    EXPECT_NE(a, enc.encode_image("window"));
    EXPECT_NEAR(l2_norm(a.data()), 1.0, 1e-9);
    EXPECT_NEAR(l2_norm(enc.encode_image("v#3").data()), 1.0, 1e-9);
}

TEST(PseudoEncoder, DistinctWordsAreNearlyOrthogonal) {
    PseudoEncoder enc(1, 64);
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
        const Tensor a = enc.encode_text("w" + std::to_string(2 * i));
        const Tensor b = enc.encode_text("w" + std::to_string(2 * i + 1));
        double dot = 0.0;
        for (std::size_t k = 0; k < 64; ++k) dot += a[k] * b[k];
        if (dot >= 0.5) ++violations;
    }
    EXPECT_EQ(violations, 0);
}

TEST(PseudoEncoder, TextEmbedErrors) {
    PseudoEncoder enc(1, 8);
    EXPECT_THROW(text_embed(nullptr, "a"), ConfigError);
    EXPECT_THROW(text_embed(&enc, ""), ValidationError);
    EXPECT_EQ(text_embed(&enc, "a"), enc.encode_text("a"));
    EXPECT_THROW(PseudoEncoder(1, 0), ConfigError);
}

TEST(Synth, LabelHistogramAndSplit) {
    SynthOptions o = small_synth();
    o.videos_per_class = 5;
    const auto ds = synth_dataset(o);
    EXPECT_EQ(ds.class_names, (std::vector<std::string>{"alpha", "beta", "Normal"}));
    EXPECT_EQ(ds.train.size() + ds.test.size(), 3u * 5u);
    EXPECT_EQ(ds.test.size(), 3u);
    std::map<int, int> per_class;
    for (const auto* split : {&ds.train, &ds.test}) {
        for (const auto& v : *split) {
            validate(v);
            ++per_class[v.video_label()];
            EXPECT_GE(v.frame_count(), o.min_frames);
            EXPECT_LE(v.frame_count(), o.max_frames);
            const int label = v.video_label();
            if (label != v.normal_class()) {
                // one contiguous anomalous span of 30-70% of the frames
                const auto first = std::find(v.labels.begin(), v.labels.end(), label) - v.labels.begin();
                const auto count = std::count(v.labels.begin(), v.labels.end(), label);
                for (auto t = first; t < first + count; ++t) EXPECT_EQ(v.labels[t], label);
                EXPECT_GE(count, std::ceil(0.3 * v.frame_count()));
                EXPECT_LE(count, std::floor(0.7 * v.frame_count()));
            }
        }
    }
    EXPECT_EQ(per_class, (std::map<int, int>{{0, 5}, {1, 5}, {2, 5}}));
}

TEST(Synth, FullSeparabilityGivesIdenticalAnomalousFrames) {
    SynthOptions o = small_synth();
    o.separability = 1.0;
    const auto ds = synth_dataset(o);
    const Tensor anchors = synth_anchors(o);
    const double amplitude = std::sqrt(static_cast<double>(o.dim));
    for (const auto& v : ds.train) {
        for (std::size_t t = 0; t < v.frame_count(); ++t) {
            const auto anchor = anchors.row(static_cast<std::size_t>(v.labels[t]));
            for (std::size_t d = 0; d < o.dim; ++d) {
                EXPECT_EQ(v.frames.at(t, d), static_cast<double>(static_cast<float>(amplitude * anchor[d])));
            }
        }
    }
}

TEST(Synth, AnchorsAreUnitDirections) {
    const Tensor anchors = synth_anchors(small_synth(5, 64));
    for (std::size_t c = 0; c < anchors.rows(); ++c) EXPECT_NEAR(l2_norm(anchors.row(c)), 1.0, 1e-12);
}

TEST(Synth, NearestAnchorClassifierIsAccurate) {
    SynthOptions o;
    o.seed = 11;
    o.dim = 64;
    o.videos_per_class = 4;
    o.min_frames = 50;
    o.max_frames = 80;
    const auto ds = synth_dataset(o);
    const Tensor anchors = synth_anchors(o);
    std::size_t correct = 0, total = 0;
    for (const auto* split : {&ds.train, &ds.test}) {
        for (const auto& v : *split) {
            for (std::size_t t = 0; t < v.frame_count(); ++t) {
                std::size_t best = 0;
                double best_dot = -1e300;
                for (std::size_t c = 0; c < anchors.rows(); ++c) {
                    double dot = 0.0;
                    for (std::size_t d = 0; d < o.dim; ++d) dot += anchors.at(c, d) * v.frames.at(t, d);
                    if (dot > best_dot) {
                        best_dot = dot;
                        best = c;
                    }
                }
                correct += static_cast<int>(best) == v.labels[t];
                ++total;
            }
        }
    }
    EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), 0.99);
}

TEST(Synth, SameSeedWritesIdenticalFiles) {
    TempDir a("a"), b("b");
    const SynthOptions o = small_synth(7);
    const auto ma = write_dataset(a.path(), synth_dataset(o));
    const auto mb = write_dataset(b.path(), synth_dataset(o));
    EXPECT_EQ(read_bytes(ma), read_bytes(mb));
    const auto manifest = load_manifest(ma);
    for (const auto& rel : manifest.train) {
        EXPECT_EQ(read_bytes(a.path() / rel), read_bytes(b.path() / rel));
    }
    SynthOptions other = o;
    other.seed = 8;
    EXPECT_NE(synth_dataset(other).train[0].frames, synth_dataset(o).train[0].frames);
}

TEST(Synth, OptionValidation) {
    SynthOptions o = small_synth();
    o.separability = 1.5;
    EXPECT_THROW(o.validate(), ConfigError);
    o = small_synth();
    o.min_frames = 30;
    o.max_frames = 20;
    EXPECT_THROW(o.validate(), ConfigError);
}

TEST(Dataset, ManifestSplitsLoad) {
    TempDir dir;
    const auto ds = synth_dataset(small_synth());
    const auto path = write_dataset(dir.path(), ds);
    const Dataset train = load_split(path, "train");
    const Dataset test = load_split(path, "test");
    EXPECT_EQ(train.videos.size(), ds.train.size());
    EXPECT_EQ(test.videos.size(), ds.test.size());
    EXPECT_EQ(train.dim(), 16u);
    EXPECT_EQ(train.anomaly_classes(), 2u);
    EXPECT_EQ(train.videos[0].frames, ds.train[0].frames);
    EXPECT_THROW(load_split(path, "validation"), ConfigError);
}

} // namespace
} // namespace pvvtt
