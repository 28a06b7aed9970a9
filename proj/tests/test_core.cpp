#include <cmath>
#include <functional>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <gtest/gtest.h>

#include "pvvtt/core/hash.hpp"
#include "pvvtt/core/ops.hpp"
#include "pvvtt/core/tape.hpp"
#include "pvvtt/core/transformer.hpp"
#include "pvvtt/errors.hpp"
#include "support.hpp"

namespace pvvtt {
namespace {

using testing::finite_difference;
using testing::max_abs_diff;
using testing::random_tensor;
using testing::relative_error;

using BigFloat = boost::multiprecision::cpp_dec_float_50;

// Checks d/dx of sum(build(...) * R) for every input against central
// differences. Inputs are registered as tape parameters so they get
// gradients.
void check_gradients(std::vector<Tensor>& inputs,
                     const std::function<Var(Tape&, const std::vector<Var>&)>& build,
                     double tolerance = 1e-6) {
    Rng rng(99);
    Tensor projection;
    auto eval = [&](bool with_grad, Gradients* grads) {
        Tape tape;
        std::vector<Var> vars;
        for (auto& t : inputs) vars.push_back(tape.parameter(t));
        Var out = build(tape, vars);
        if (projection.empty()) projection = random_tensor(tape.value(out).shape(), rng);
        Var loss = tape.sum(tape.mul(out, tape.constant(projection)));
        if (with_grad) *grads = tape.backward(loss);
        return tape.value(loss)[0];
    };
    Gradients grads;
    eval(true, &grads);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Tensor analytic = grads.of(inputs[i]);
        const Tensor numeric = finite_difference(inputs[i], [&] { return eval(false, nullptr); });
        for (std::size_t j = 0; j < numeric.size(); ++j) {
            const double err = std::abs(analytic[j] - numeric[j]) / std::max(1.0, std::abs(numeric[j]));
            EXPECT_LT(err, tolerance) << "input " << i << " entry " << j << ": analytic " << analytic[j]
                                      << " numeric " << numeric[j];
        }
    }
}

TEST(Tensor, ShapeMustMatchData) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(t.rows(), 2u);
    EXPECT_EQ(t.cols(), 3u);
    EXPECT_EQ(t.at(1, 2), 6.0);
    EXPECT_EQ(t.row_tensor(1), Tensor::vector({4, 5, 6}));
    EXPECT_EQ(Tensor::vector({1, 2}).rows(), 1u);
}

TEST(Tensor, FiniteCheck) {
    Tensor t = Tensor::vector({1.0, 2.0});
    EXPECT_TRUE(t.all_finite());
    t[1] = std::nan("");
    EXPECT_FALSE(t.all_finite());
    t[1] = INFINITY;
    EXPECT_FALSE(t.all_finite());
}

TEST(Ops, AffineMatchesNaiveLoop) {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t in = 1 + rng.below(9);
        const std::size_t out = 1 + rng.below(9);
        const std::size_t n = 1 + rng.below(5);
        MlpLayer layer{random_tensor({out, in}, rng), random_tensor({out}, rng)};
        Tensor x = random_tensor({n, in}, rng);
        Tensor y = ops::affine(layer, x);
        ASSERT_EQ(y.shape(), (std::vector<std::size_t>{n, out}));
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t o = 0; o < out; ++o) {
                double acc = layer.bias[o];
                for (std::size_t i = 0; i < in; ++i) acc += layer.weight.at(o, i) * x.at(r, i);
                EXPECT_NEAR(y.at(r, o), acc, 1e-13);
            }
        }
    }
}

TEST(Ops, AffineRejectsWrongInputWidth) {
    Rng rng(2);
    MlpLayer layer = MlpLayer::init(3, 4, rng);
    EXPECT_THROW(ops::affine(layer, Tensor({2, 5})), DimensionError);
}

TEST(Ops, ElementwiseProductAndAdd) {
    Tensor a = Tensor::vector({1, 2, 3});
    Tensor b = Tensor::vector({4, 5, 6});
    EXPECT_EQ(ops::elementwise_product(a, b), Tensor::vector({4, 10, 18}));
    EXPECT_EQ(ops::add(a, b), Tensor::vector({5, 7, 9}));
    EXPECT_THROW(ops::elementwise_product(a, Tensor::vector({1, 2})), DimensionError);
}

TEST(Ops, MeanOfEmptyListIsAnAggregationError) {
    std::vector<Tensor> none;
    EXPECT_THROW(ops::mean_stack(none), AggregationError);
    Tape tape;
    std::vector<Var> no_vars;
    EXPECT_THROW(tape.mean(no_vars), AggregationError);
}

TEST(Ops, SoftmaxMatchesHighPrecisionOracle) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.below(12);
        const double spread = trial < 25 ? 5.0 : 800.0;
        Tensor x = random_tensor({2, n}, rng, -spread, spread);
        Tensor p = ops::softmax(x);
        ASSERT_TRUE(p.all_finite());
        for (std::size_t r = 0; r < 2; ++r) {
            BigFloat denom = 0;
            for (std::size_t i = 0; i < n; ++i) denom += boost::multiprecision::exp(BigFloat(x.at(r, i)));
            for (std::size_t i = 0; i < n; ++i) {
                const BigFloat exact = boost::multiprecision::exp(BigFloat(x.at(r, i))) / denom;
                EXPECT_NEAR(p.at(r, i), exact.convert_to<double>(), 1e-15);
            }
        }
    }
}

TEST(Ops, SoftmaxOfHugeLogitsStaysFinite) {
    Tensor p = ops::softmax(Tensor::vector({1e308, 1e308, -1e308}));
    EXPECT_TRUE(p.all_finite());
    EXPECT_NEAR(p[0], 0.5, 1e-15);
    EXPECT_NEAR(p[2], 0.0, 1e-300);
}

TEST(Ops, LayerNormMatchesDefinition) {
    Rng rng(4);
    LayerNormParams ln{random_tensor({6}, rng), random_tensor({6}, rng), 1e-5};
    Tensor x = random_tensor({3, 6}, rng, -3, 3);
    Tensor y = ops::layer_norm(x, ln);
    for (std::size_t r = 0; r < 3; ++r) {
        double mean = 0.0;
        for (double v : x.row(r)) mean += v;
        mean /= 6;
        double var = 0.0;
        for (double v : x.row(r)) var += (v - mean) * (v - mean);
        var /= 6;
        for (std::size_t c = 0; c < 6; ++c) {
            const double expect = (x.at(r, c) - mean) / std::sqrt(var + 1e-5) * ln.gain[c] + ln.bias[c];
            EXPECT_NEAR(y.at(r, c), expect, 1e-13);
        }
    }
}

TEST(Ops, GeluIsExact) {
    for (double x : {-4.0, -1.0, -0.1, 0.0, 0.3, 1.0, 2.5}) {
        const double expect = 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
        EXPECT_NEAR(ops::gelu(Tensor::vector({x}))[0], expect, 1e-15);
    }
}

TEST(Ops, ConcatAlongColumns) {
    std::vector<Tensor> parts{Tensor::matrix(2, 1, {1, 2}), Tensor::matrix(2, 2, {3, 4, 5, 6})};
    EXPECT_EQ(ops::concat(parts), Tensor::matrix(2, 3, {1, 3, 4, 2, 5, 6}));
    std::vector<Tensor> bad{Tensor::matrix(2, 1, {1, 2}), Tensor::matrix(1, 1, {3})};
    EXPECT_THROW(ops::concat(bad), DimensionError);
}

TEST(TapeGradients, AffineWeightsBiasAndInput) {
    Rng rng(11);
    MlpLayer layer{random_tensor({4, 3}, rng), random_tensor({4}, rng)};
    Tensor x = random_tensor({5, 3}, rng);
    Tensor projection = random_tensor({5, 4}, rng);
    auto eval = [&](Gradients* grads) {
        Tape tape;
        Var out = tape.affine(layer, tape.parameter(x));
        Var loss = tape.sum(tape.mul(out, tape.constant(projection)));
        if (grads) *grads = tape.backward(loss);
        return tape.value(loss)[0];
    };
    Gradients grads;
    eval(&grads);
    for (Tensor* p : {&layer.weight, &layer.bias, &x}) {
        const Tensor numeric = finite_difference(*p, [&] { return eval(nullptr); });
        EXPECT_LT(max_abs_diff(grads.of(*p), numeric), 1e-8);
    }
}

TEST(TapeGradients, MulAndAddWithRowBroadcast) {
    Rng rng(12);
    std::vector<Tensor> in{random_tensor({4, 3}, rng), random_tensor({1, 3}, rng), random_tensor({4, 3}, rng)};
    check_gradients(in, [](Tape& t, const std::vector<Var>& v) {
        return t.add(t.mul(v[0], v[1]), t.mul(v[1], v[2]));
    });
}

TEST(TapeGradients, MeanConcatGather) {
    Rng rng(13);
    std::vector<Tensor> in{random_tensor({3, 2}, rng), random_tensor({3, 2}, rng), random_tensor({3, 4}, rng)};
    check_gradients(in, [](Tape& t, const std::vector<Var>& v) {
        std::vector<Var> pair{v[0], v[1]};
        Var m = t.mean(pair);
        std::vector<Var> parts{m, v[2]};
        Var c = t.concat(parts);
        return t.gather_rows(c, {2, 0, 2, 1});
    });
}

TEST(TapeGradients, SoftmaxLayerNormGelu) {
    Rng rng(14);
    std::vector<Tensor> in{random_tensor({3, 5}, rng, -2, 2)};
    LayerNormParams ln{random_tensor({5}, rng), random_tensor({5}, rng), 1e-5};
    check_gradients(in, [&](Tape& t, const std::vector<Var>& v) {
        return t.softmax(t.gelu(t.layer_norm(v[0], ln)));
    });
}

TEST(TapeGradients, LayerNormParameters) {
    Rng rng(15);
    LayerNormParams ln{random_tensor({4}, rng), random_tensor({4}, rng), 1e-5};
    Tensor x = random_tensor({3, 4}, rng, -2, 2);
    Tensor projection = random_tensor({3, 4}, rng);
    auto eval = [&](Gradients* grads) {
        Tape tape;
        Var loss = tape.sum(tape.mul(tape.layer_norm(tape.constant(x), ln), tape.constant(projection)));
        if (grads) *grads = tape.backward(loss);
        return tape.value(loss)[0];
    };
    Gradients grads;
    eval(&grads);
    for (Tensor* p : {&ln.gain, &ln.bias}) {
        EXPECT_LT(max_abs_diff(grads.of(*p), finite_difference(*p, [&] { return eval(nullptr); })), 1e-8);
    }
}

TEST(TapeGradients, MultiHeadAttention) {
    Rng rng(16);
    // 2 batches, Lq = 2, Lk = 3, d = 4, 2 heads
    std::vector<Tensor> in{random_tensor({4, 4}, rng), random_tensor({6, 4}, rng), random_tensor({6, 4}, rng)};
    check_gradients(in, [](Tape& t, const std::vector<Var>& v) { return t.attention(v[0], v[1], v[2], 2, 2); });
}

TEST(TapeGradients, CrossEntropyAndPairDistance) {
    Rng rng(17);
    std::vector<Tensor> in{random_tensor({4, 3}, rng, -2, 2)};
    check_gradients(in, [](Tape& t, const std::vector<Var>& v) {
        Var p = t.softmax(v[0]);
        Var ce = t.cross_entropy(p, {0, 2, 1, 2});
        Var sm = t.pair_squared_distance(p, {{0, 1}, {2, 3}, {1, 2}});
        return t.linear_combination(ce, 1.0, t.scale(sm, 3.0), 0.1);
    });
}

TEST(Tape, CrossEntropyFloorsProbabilities) {
    Tape tape;
    Var p = tape.constant(Tensor::matrix(1, 2, {1.0, 0.0}));
    Var ce = tape.cross_entropy(p, {1});
    EXPECT_NEAR(tape.value(ce)[0], -std::log(1e-12), 1e-9);
    EXPECT_THROW(tape.cross_entropy(p, {2}), LabelError);
    EXPECT_THROW(tape.cross_entropy(p, {0, 1}), DimensionError);
}

TEST(Tape, EmptyPairListGivesZero) {
    Tape tape;
    Var p = tape.constant(Tensor::matrix(2, 2, {0.1, 0.9, 0.5, 0.5}));
    EXPECT_EQ(tape.value(tape.pair_squared_distance(p, {}))[0], 0.0);
    EXPECT_NEAR(tape.value(tape.pair_squared_distance(p, {{0, 1}}))[0], 0.16 + 0.16, 1e-15);
}

TEST(Tape, SharedInputsAccumulate) {
    Tensor x = Tensor::vector({3.0});
    Tape tape;
    Var v = tape.parameter(x);
    EXPECT_EQ(tape.parameter(x).id, v.id);
    Var loss = tape.sum(tape.add(tape.mul(v, v), v));
    const Gradients g = tape.backward(loss);
    EXPECT_DOUBLE_EQ(g.of(x)[0], 2 * 3.0 + 1.0);
}

TEST(Tape, BackwardNeedsScalarRoot) {
    Tensor x = Tensor::vector({1.0, 2.0});
    Tape tape;
    Var v = tape.parameter(x);
    EXPECT_THROW(tape.backward(v), UsageError);
}

TEST(Tape, UnusedParameterHasZeroGradient) {
    Tensor used = Tensor::vector({1.0});
    Tensor unused = Tensor::vector({5.0, 6.0});
    Tape tape;
    const Gradients g = tape.backward(tape.sum(tape.parameter(used)));
    EXPECT_EQ(g.of(unused), Tensor::zeros_like(unused));
    EXPECT_EQ(g.find(unused), nullptr);
}

TEST(Tape, GatherOutOfRange) {
    Tape tape;
    Var x = tape.constant(Tensor({2, 2}));
    EXPECT_THROW(tape.gather_rows(x, {2}), IndexError);
}

TEST(Tape, AttentionShapeErrors) {
    Tape tape;
    Var q = tape.constant(Tensor({2, 4}));
    Var k = tape.constant(Tensor({3, 4}));
    EXPECT_THROW(tape.attention(q, k, k, 1, 3), DimensionError);
    EXPECT_THROW(tape.attention(q, k, k, 2, 2), DimensionError);
}

// Plain loops: scaled dot-product attention per head, then the post-norm block.
std::vector<Tensor> naive_encoder(const EncoderLayerParams& p, const std::vector<Tensor>& tokens) {
    const std::size_t L = tokens.size();
    const std::size_t d = p.model_dim();
    const std::size_t dh = d / p.heads;
    std::vector<Tensor> q, k, v;
    for (const auto& t : tokens) {
        q.push_back(ops::affine(p.query, t));
        k.push_back(ops::affine(p.key, t));
        v.push_back(ops::affine(p.value, t));
    }
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < L; ++i) {
        Tensor mixed({d});
        for (std::size_t h = 0; h < p.heads; ++h) {
            std::vector<double> s(L);
            double mx = -1e300;
            for (std::size_t j = 0; j < L; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < dh; ++c) dot += q[i][h * dh + c] * k[j][h * dh + c];
                s[j] = dot / std::sqrt(static_cast<double>(dh));
                mx = std::max(mx, s[j]);
            }
            double z = 0.0;
            for (double& x : s) z += (x = std::exp(x - mx));
            for (std::size_t j = 0; j < L; ++j) {
                for (std::size_t c = 0; c < dh; ++c) mixed[h * dh + c] += s[j] / z * v[j][h * dh + c];
            }
        }
        Tensor h1 = ops::layer_norm(ops::add(tokens[i], ops::affine(p.output, mixed)), p.norm1);
        Tensor ff = ops::affine(p.ff_out, ops::gelu(ops::affine(p.ff_in, h1)));
        out.push_back(ops::layer_norm(ops::add(h1, ff), p.norm2));
    }
    return out;
}

TEST(Transformer, MatchesNaiveLoops) {
    Rng rng(20);
    EncoderLayerParams p = EncoderLayerParams::init(8, 2, 32, rng);
    p.norm1.gain = random_tensor({8}, rng);
    p.norm2.bias = random_tensor({8}, rng);
    std::vector<Tensor> tokens;
    for (int i = 0; i < 5; ++i) tokens.push_back(random_tensor({8}, rng));
    Tensor weights;
    const auto got = transformer_encoder_layer(p, tokens, &weights);
    const auto expect = naive_encoder(p, tokens);
    ASSERT_EQ(got.size(), expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_LT(max_abs_diff(got[i], expect[i]), 1e-12);
    ASSERT_EQ(weights.shape(), (std::vector<std::size_t>{2 * 5, 5}));
    for (std::size_t r = 0; r < weights.rows(); ++r) {
        double s = 0.0;
        for (double w : weights.row(r)) s += w;
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Transformer, LastPositionEqualsFullLayer) {
    Rng rng(21);
    EncoderLayerParams p = EncoderLayerParams::init(16, 8, 64, rng);
    Tensor tokens = random_tensor({3 * 4, 16}, rng);
    Tape tape;
    Var x = tape.constant(tokens);
    const Tensor full = tape.value(encoder_layer(tape, p, x, 3));
    const Tensor last = tape.value(encoder_layer_last(tape, p, x, 3));
    for (std::size_t b = 0; b < 3; ++b) {
        for (std::size_t c = 0; c < 16; ++c) EXPECT_NEAR(last.at(b, c), full.at(b * 4 + 3, c), 1e-12);
    }
}

TEST(Transformer, RejectsIndivisibleHeads) {
    Rng rng(22);
    EXPECT_THROW(EncoderLayerParams::init(10, 4, 40, rng), DimensionError);
}

TEST(Mlp, InitIsBoundedWithZeroBias) {
    Rng rng(23);
    MlpLayer layer = MlpLayer::init(7, 25, rng);
    EXPECT_EQ(layer.weight.shape(), (std::vector<std::size_t>{7, 25}));
    for (double w : layer.weight.storage()) EXPECT_LE(std::abs(w), 1.0 / 5.0);
    for (double b : layer.bias.storage()) EXPECT_EQ(b, 0.0);
}

TEST(Hash, Fnv1aReferenceValues) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
    EXPECT_EQ(content_hash("a"), "af63dc4c8601ec8c");
}

TEST(Random, SeededStreamsAreReproducible) {
    Rng a(5, 9), b(5, 9), c(5, 10);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
    Rng a2(5, 9);
    EXPECT_NE(a2.next(), c.next());
    Rng r(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(r.below(7), 7u);
    }
}

} // namespace
} // namespace pvvtt
