#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

#include "pvvtt/errors.hpp"
#include "pvvtt/gnn/mission_gnn.hpp"

using namespace pvvtt;
using namespace pvvtt::testing;

namespace {

MissionGnnParams random_params(std::size_t E, std::size_t D, Rng& rng) {
    MissionGnnParams p;
    p.input_proj = {random_tensor({D, E}, rng), random_tensor({D}, rng)};
    for (auto& phi : p.phi) phi = {random_tensor({D, D}, rng), random_tensor({D}, rng)};
    return p;
}

MissionGnnParams scaled_identity_params(std::size_t D) {
    MissionGnnParams p;
    p.input_proj = MlpLayer::identity(D);
    for (std::size_t h = 0; h < 3; ++h) {
        p.phi[h] = MlpLayer::identity(D);
        for (double& w : p.phi[h].weight.storage()) w *= static_cast<double>(h + 1);
    }
    return p;
}

MissionKG chain_kg() {
    return assemble_kg(0, "chain", {{"key", {{"assoc", 1.0}}}});
}

} // namespace

TEST(MissionGnn, ConstantMessagesWithZeroProjection) {
    const std::size_t E = 5, D = 4;
    MissionGnnParams p;
    p.input_proj = {Tensor::zeros({D, E}), Tensor::filled({D}, 1.0)};
    for (auto& phi : p.phi) phi = MlpLayer::identity(D);
    Rng rng(1);
    const MissionKG kg = random_kg(rng, 4, 3);
    const Tensor features = random_tensor({kg.nodes.size(), E}, rng);

    const MissionOutput out = forward_mission(p, kg, features);
    ASSERT_EQ(out.trace.edges.size(), kg.edges.size());
    for (const auto& e : out.trace.edges) {
        for (double x : e.message.storage()) EXPECT_DOUBLE_EQ(x, 1.0);
        EXPECT_DOUBLE_EQ(e.norm, std::sqrt(static_cast<double>(D)));
    }
    for (double x : out.embedding.storage()) EXPECT_DOUBLE_EQ(x, 1.0);
}

TEST(MissionGnn, ChainByHand) {
    const MissionKG kg = chain_kg();
    ASSERT_EQ(kg.nodes.size(), 4u);
    const MissionGnnParams p = scaled_identity_params(2);
    const Tensor features = Tensor::matrix(4, 2, {1, 2, 3, 1, 2, 2, 1, -1});

    const MissionOutput out = forward_mission(p, kg, features);
    // key: 1*(3,1)*(1,2) = (3,2); assoc: 2*(2,2)*(3,2) = (12,8); embedding: 3*(1,-1)*(12,8)
    EXPECT_EQ(out.trace.find(0, 1)->message.storage(), (std::vector<double>{3, 2}));
    EXPECT_EQ(out.trace.find(1, 2)->message.storage(), (std::vector<double>{12, 8}));
    EXPECT_EQ(out.embedding.storage(), (std::vector<double>{36, -24}));
    EXPECT_DOUBLE_EQ(out.trace.find(1, 2)->norm, std::sqrt(144.0 + 64.0));
}

TEST(MissionGnn, AveragesOverPredecessors) {
    // Two key concepts with one association each: the embedding averages both.
    const MissionKG kg = assemble_kg(0, "m", {{"a", {{"x", 1.0}}}, {"b", {{"y", 1.0}}}});
    const MissionGnnParams p = scaled_identity_params(1);
    // node order: sensor, a, b, x, y, embedding
    const Tensor features = Tensor::matrix(6, 1, {2, 1, 3, 1, 1, 1});
    const MissionOutput out = forward_mission(p, kg, features);
    // a: 2, b: 6; x: 2*2 = 4, y: 2*6 = 12; embedding: mean(3*4, 3*12) = 24
    EXPECT_DOUBLE_EQ(out.embedding[0], 24.0);
}

TEST(MissionGnn, AgreesWithRecursiveOracleOnRandomGraphs) {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t E = 3 + rng.below(5);
        const std::size_t D = 2 + rng.below(5);
        const MissionKG kg = random_kg(rng, 1 + rng.below(6), 4, trial);
        const MissionGnnParams p = random_params(E, D, rng);
        const Tensor features = random_tensor({kg.nodes.size(), E}, rng);

        const MissionOutput out = forward_mission(p, kg, features);
        oracle::NaiveGnn naive(p, kg, features);
        const auto& expected = naive.final_feature(kg.embedding());
        ASSERT_EQ(out.embedding.size(), D);
        for (std::size_t d = 0; d < D; ++d) {
            EXPECT_NEAR(out.embedding[d], expected[d], 1e-12) << "trial " << trial;
        }
        for (const auto& e : out.trace.edges) {
            const auto& m = naive.messages.at({e.source, e.target});
            for (std::size_t d = 0; d < D; ++d) EXPECT_NEAR(e.message[d], m[d], 1e-12);
        }
    }
}

TEST(MissionGnn, TraceCoversEveryEdgeInOrder) {
    Rng rng(5);
    const MissionKG kg = random_kg(rng, 5, 3);
    const MissionGnnParams p = random_params(6, 4, rng);
    const MissionOutput out = forward_mission(p, kg, random_tensor({kg.nodes.size(), 6}, rng));
    ASSERT_EQ(out.trace.edges.size(), kg.edges.size());
    for (std::size_t e = 0; e < kg.edges.size(); ++e) {
        EXPECT_EQ(out.trace.edges[e].source, kg.edges[e].source);
        EXPECT_EQ(out.trace.edges[e].target, kg.edges[e].target);
        EXPECT_DOUBLE_EQ(out.trace.edges[e].norm, l2_norm(out.trace.edges[e].message.data()));
        EXPECT_GE(out.trace.edges[e].norm, 0.0);
    }
    EXPECT_EQ(out.trace.node_features.size(), kg.nodes.size());
    EXPECT_EQ(out.trace.node_features[kg.embedding()], out.embedding);
    EXPECT_EQ(out.trace.find(kg.embedding(), kg.sensor()), nullptr);
}

TEST(MissionGnn, ChangingOneAssociationLeavesOtherBranchesAlone) {
    const MissionKG kg = regular_kg(3, 2, 0, "m");
    Rng rng(9);
    const MissionGnnParams p = random_params(4, 3, rng);
    Tensor features = random_tensor({kg.nodes.size(), 4}, rng);
    const MissionOutput before = forward_mission(p, kg, features);

    const std::size_t changed = kg.nodes_at(KgLevel::association).front();
    for (double& x : features.row(changed)) x += 0.5;
    const MissionOutput after = forward_mission(p, kg, features);

    for (std::size_t e = 0; e < kg.edges.size(); ++e) {
        const auto& edge = kg.edges[e];
        const bool touches = edge.target == changed || edge.source == changed;
        if (touches) {
            EXPECT_NE(before.trace.edges[e].message, after.trace.edges[e].message);
        } else {
            EXPECT_EQ(before.trace.edges[e].message, after.trace.edges[e].message);
        }
    }
    EXPECT_NE(before.embedding, after.embedding);
}

TEST(MissionGnn, BatchedForwardMatchesSingleFrame) {
    const std::size_t E = 8, D = 5, F = 4;
    PseudoEncoder encoder(11, E);
    ConceptCache cache(&encoder);
    Rng rng(3);
    const MissionKG kg = random_kg(rng, 4, 3);
    const MissionGnnParams p = random_params(E, D, rng);
    const Tensor frames = random_tensor({F, E}, rng);

    Tape tape;
    std::vector<Var> messages;
    Var out = forward_mission(tape, p, kg, concept_features(kg, cache), tape.constant(frames), &messages);
    ASSERT_EQ(tape.value(out).rows(), F);
    ASSERT_EQ(messages.size(), kg.edges.size());

    for (std::size_t f = 0; f < F; ++f) {
        const MissionOutput single = forward_mission(p, kg, init_node_features(kg, frames.row_tensor(f), cache));
        for (std::size_t d = 0; d < D; ++d) {
            EXPECT_NEAR(tape.value(out).at(f, d), single.embedding[d], 1e-12);
        }
        for (std::size_t e = 0; e < kg.edges.size(); ++e) {
            const Tensor& m = tape.value(messages[e]);
            for (std::size_t d = 0; d < D; ++d) {
                EXPECT_NEAR(m.at(f, d), single.trace.edges[e].message[d], 1e-12);
            }
        }
    }
}

TEST(MissionGnn, GradientsMatchFiniteDifferences) {
    const std::size_t E = 4, D = 3, F = 2;
    Rng rng(17);
    const MissionKG kg = random_kg(rng, 3, 2);
    MissionGnnParams p = random_params(E, D, rng);
    const Tensor concepts = random_tensor({kg.nodes.size(), E}, rng);
    const Tensor frames = random_tensor({F, E}, rng);
    const Tensor probe = random_tensor({F, D}, rng);

    auto loss = [&](Tape& tape) {
        Var out = forward_mission(tape, p, kg, concepts, tape.constant(frames));
        return tape.sum(tape.mul(out, tape.constant(probe)));
    };
    Tape tape;
    const Gradients grads = tape.backward(loss(tape));

    std::vector<Tensor*> params = {&p.input_proj.weight, &p.input_proj.bias};
    for (auto& phi : p.phi) {
        params.push_back(&phi.weight);
        params.push_back(&phi.bias);
    }
    for (Tensor* t : params) {
        const Tensor numeric = finite_difference(*t, [&] {
            Tape fresh;
            return fresh.value(loss(fresh))[0];
        });
        const Tensor analytic = grads.of(*t);
        for (std::size_t i = 0; i < t->size(); ++i) {
            EXPECT_NEAR(analytic[i], numeric[i], 1e-6 * std::max(1.0, std::abs(numeric[i])));
        }
    }
}

TEST(MissionGnn, RejectsMismatchedFeatures) {
    Rng rng(4);
    const MissionKG kg = random_kg(rng, 2, 2);
    const MissionGnnParams p = random_params(4, 3, rng);
    EXPECT_THROW(forward_mission(p, kg, random_tensor({kg.nodes.size(), 5}, rng)), DimensionError);
    EXPECT_THROW(forward_mission(p, kg, random_tensor({kg.nodes.size() - 1, 4}, rng)), DimensionError);
}

TEST(MissionGnn, ParameterInitialisation) {
    GnnConfig cfg;
    cfg.E = 64;
    cfg.D = 8;
    Rng rng(0);
    const MissionGnnParams p = MissionGnnParams::init(cfg, rng);
    EXPECT_EQ(p.E(), 64u);
    EXPECT_EQ(p.D(), 8u);
    for (double w : p.input_proj.weight.storage()) EXPECT_LE(std::abs(w), 1.0 / 8.0);
    for (const auto& phi : p.phi) {
        EXPECT_EQ(phi.weight.shape(), (std::vector<std::size_t>{8, 8}));
        for (double b : phi.bias.storage()) EXPECT_EQ(b, 0.0);
    }
}

TEST(NodeFeatures, RowsComeFromFrameAndWords) {
    PseudoEncoder encoder(1, 16);
    ConceptCache cache(&encoder);
    const MissionKG kg = assemble_kg(0, "Theft", {{"bag", {{"hand", 1.0}}}, {"door", {{"hand", 1.0}}}});
    Rng rng(1);
    const Tensor frame = random_tensor({16}, rng);
    const Tensor f = init_node_features(kg, frame, cache);
    ASSERT_EQ(f.shape(), (std::vector<std::size_t>{kg.nodes.size(), 16}));
    EXPECT_EQ(f.row_tensor(kg.sensor()).storage(), frame.storage());
    EXPECT_EQ(f.row_tensor(1).storage(), encoder.encode_text("bag").storage());
    EXPECT_EQ(f.row_tensor(kg.embedding()).storage(), encoder.encode_text("Theft").storage());

    const auto assoc = kg.nodes_at(KgLevel::association);
    ASSERT_EQ(assoc.size(), 2u);
    EXPECT_EQ(f.row_tensor(assoc[0]), f.row_tensor(assoc[1]));
    EXPECT_EQ(cache.size(), 4u);

    const Tensor c = concept_features(kg, cache);
    for (double x : c.row(kg.sensor())) EXPECT_EQ(x, 0.0);
    EXPECT_EQ(c.row_tensor(1), f.row_tensor(1));
}

TEST(NodeFeatures, FrameWidthMustMatchEncoder) {
    PseudoEncoder encoder(1, 16);
    ConceptCache cache(&encoder);
    const MissionKG kg = chain_kg();
    EXPECT_THROW(init_node_features(kg, Tensor::zeros({8}), cache), DimensionError);
}

TEST(Fuse, ConcatenatesInMissionOrder) {
    const FusedFrameToken t = fuse({Tensor::vector({1, 2}), Tensor::vector({3, 4}), Tensor::vector({5, 6})});
    EXPECT_EQ(t.M, 3u);
    EXPECT_EQ(t.D, 2u);
    EXPECT_EQ(t.f.storage(), (std::vector<double>{1, 2, 3, 4, 5, 6}));
    EXPECT_EQ(t.slice(1).storage(), (std::vector<double>{3, 4}));
    EXPECT_THROW(t.slice(3), IndexError);
}

TEST(Fuse, RejectsEmptyAndRaggedInput) {
    EXPECT_THROW(fuse({}), DimensionError);
    EXPECT_THROW(fuse({Tensor::vector({1, 2}), Tensor::vector({3})}), DimensionError);
}
