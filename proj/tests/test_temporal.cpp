#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

#include "pvvtt/errors.hpp"
#include "pvvtt/temporal/temporal.hpp"

using namespace pvvtt;
using namespace pvvtt::testing;

namespace {

TemporalConfig small_config(std::size_t A = 4) {
    TemporalConfig cfg;
    cfg.window = A;
    cfg.model_dim = 8;
    cfg.heads = 2;
    cfg.ff_mult = 2;
    return cfg;
}

std::vector<Tensor> random_sequence(std::size_t T, std::size_t dim, Rng& rng) {
    std::vector<Tensor> seq;
    for (std::size_t t = 0; t < T; ++t) seq.push_back(random_tensor({dim}, rng));
    return seq;
}

// Projection, positional encoding, the encoder layer evaluated on every
// position, then the output layer and a plain softmax over the last position.
std::vector<double> reference_classify(const TemporalHeadParams& p, const TemporalConfig& cfg,
                                       const TokenWindow& w) {
    std::vector<Tensor> tokens;
    const Tensor pe = positional_encoding(cfg.window, cfg.model_dim);
    for (std::size_t a = 0; a < w.tokens.size(); ++a) {
        auto z = oracle::matvec(p.token_proj, w.tokens[a].storage());
        if (cfg.positional_encoding) {
            for (std::size_t d = 0; d < z.size(); ++d) z[d] += pe.at(a, d);
        }
        tokens.push_back(Tensor::vector(z));
    }
    const auto encoded = transformer_encoder_layer(p.encoder, tokens);
    const auto logits = oracle::matvec(p.output, encoded.back().storage());
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs;
    double total = 0.0;
    for (double l : logits) total += std::exp(l - top);
    for (double l : logits) probs.push_back(std::exp(l - top) / total);
    return probs;
}

} // namespace

TEST(Window, IndicesPadWithFirstFrame) {
    EXPECT_EQ(window_indices(0, 4), (std::vector<std::size_t>{0, 0, 0, 0}));
    EXPECT_EQ(window_indices(2, 4), (std::vector<std::size_t>{0, 0, 1, 2}));
    EXPECT_EQ(window_indices(3, 4), (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_EQ(window_indices(10, 3), (std::vector<std::size_t>{8, 9, 10}));
    EXPECT_EQ(window_indices(7, 1), (std::vector<std::size_t>{7}));
}

TEST(Window, LastPositionIsAlwaysTheCurrentFrame) {
    for (std::size_t A = 1; A <= 20; ++A) {
        for (std::size_t t = 0; t < 40; ++t) {
            const auto idx = window_indices(t, A);
            ASSERT_EQ(idx.size(), A);
            EXPECT_EQ(idx.back(), t);
            for (std::size_t i = 1; i < A; ++i) EXPECT_LE(idx[i - 1], idx[i]);
            EXPECT_TRUE(std::all_of(idx.begin(), idx.end(), [&](std::size_t s) { return s <= t; }));
        }
    }
}

TEST(Window, MakeWindowCopiesTokens) {
    Rng rng(1);
    const auto seq = random_sequence(5, 3, rng);
    const TokenWindow w = make_window(seq, 1, 3);
    EXPECT_EQ(w.A, 3u);
    ASSERT_EQ(w.tokens.size(), 3u);
    EXPECT_EQ(w.tokens[0], seq[0]);
    EXPECT_EQ(w.tokens[1], seq[0]);
    EXPECT_EQ(w.tokens[2], seq[1]);
    EXPECT_THROW(make_window(seq, 5, 3), IndexError);
    EXPECT_THROW(make_window({}, 0, 3), IndexError);
}

TEST(PositionalEncoding, SinusoidalValues) {
    const Tensor pe = positional_encoding(16, 8);
    ASSERT_EQ(pe.shape(), (std::vector<std::size_t>{16, 8}));
    for (std::size_t pos = 0; pos < 16; ++pos) {
        for (std::size_t j = 0; j < 4; ++j) {
            const double angle = static_cast<double>(pos) / std::pow(10000.0, 2.0 * j / 8.0);
            EXPECT_NEAR(pe.at(pos, 2 * j), std::sin(angle), 1e-15);
            EXPECT_NEAR(pe.at(pos, 2 * j + 1), std::cos(angle), 1e-15);
        }
    }
    for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(pe.at(0, i), i % 2 == 0 ? 0.0 : 1.0);
}

TEST(TemporalConfig, Validation) {
    TemporalConfig cfg = small_config();
    EXPECT_NO_THROW(cfg.validate());
    cfg.heads = 3;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.window = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.heads = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Classify, MatchesReferenceAndSumsToOne) {
    Rng rng(8);
    for (bool pe : {true, false}) {
        TemporalConfig cfg = small_config();
        cfg.positional_encoding = pe;
        const TemporalHeadParams p = TemporalHeadParams::init(cfg, 6, 4, rng);
        const auto seq = random_sequence(7, 6, rng);
        for (std::size_t t = 0; t < seq.size(); ++t) {
            const TokenWindow w = make_window(seq, t, cfg.window);
            const ClassDistribution dist = classify(p, cfg, w, {"a", "b", "c", "Normal"});
            const auto expected = reference_classify(p, cfg, w);
            ASSERT_EQ(dist.probs.size(), 4u);
            double total = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                EXPECT_NEAR(dist.probs[c], expected[c], 1e-12);
                EXPECT_GE(dist.probs[c], 0.0);
                total += dist.probs[c];
            }
            EXPECT_NEAR(total, 1.0, 1e-12);
            EXPECT_EQ(dist.class_names.back(), "Normal");
        }
    }
}

TEST(Classify, BatchedMatchesPerWindow) {
    Rng rng(12);
    const TemporalConfig cfg = small_config(3);
    const TemporalHeadParams p = TemporalHeadParams::init(cfg, 5, 3, rng);
    const auto seq = random_sequence(6, 5, rng);

    std::vector<double> flat;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        for (std::size_t s : window_indices(t, cfg.window)) {
            flat.insert(flat.end(), seq[s].storage().begin(), seq[s].storage().end());
        }
    }
    Tape tape;
    Var probs = classify_batch(tape, p, cfg, tape.constant(Tensor::matrix(seq.size() * 3, 5, flat)), seq.size());
    const Tensor& batched = tape.value(probs);
    ASSERT_EQ(batched.rows(), seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const ClassDistribution single = classify(p, cfg, make_window(seq, t, cfg.window));
        for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(batched.at(t, c), single.probs[c], 1e-12);
    }
}

TEST(Classify, RejectsWrongWindowShape) {
    Rng rng(2);
    const TemporalConfig cfg = small_config(4);
    const TemporalHeadParams p = TemporalHeadParams::init(cfg, 6, 3, rng);
    const auto seq = random_sequence(5, 6, rng);
    EXPECT_THROW(classify(p, cfg, make_window(seq, 4, 3)), DimensionError);
    const auto narrow = random_sequence(5, 5, rng);
    EXPECT_THROW(classify(p, cfg, make_window(narrow, 4, 4)), DimensionError);
}

TEST(Classify, ArgmaxPicksLargestProbability) {
    ClassDistribution d{Tensor::vector({0.1, 0.6, 0.3}), {"a", "b", "Normal"}};
    EXPECT_EQ(d.argmax(), 1u);
}

TEST(TemporalHead, InitialisedShapes) {
    Rng rng(0);
    const TemporalConfig cfg = small_config();
    const TemporalHeadParams p = TemporalHeadParams::init(cfg, 40, 6, rng);
    EXPECT_EQ(p.token_dim(), 40u);
    EXPECT_EQ(p.classes(), 6u);
    EXPECT_EQ(p.encoder.model_dim(), 8u);
    EXPECT_EQ(p.encoder.ff_in.out_dim(), 16u);
    for (double w : p.token_proj.weight.storage()) EXPECT_LE(std::abs(w), 1.0 / std::sqrt(40.0));
}
