#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pvvtt/embed/encoder.hpp"
#include "pvvtt/gnn/mission_gnn.hpp"
#include "pvvtt/kg/kg.hpp"
#include "pvvtt/temporal/temporal.hpp"

namespace pvvtt {

struct ModelConfig {
    GnnConfig gnn;
    TemporalConfig temporal;
    std::uint64_t encoder_seed = 0;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Mission GNNs, fusion and the temporal head, with the concept features of
// every KG precomputed.
class VarModel {
public:
    VarModel() = default;
    // Throws ValidationError unless the KGs are ordered by mission_id and the
    // encoder dim equals cfg.gnn.E.
    VarModel(ModelConfig cfg, std::vector<MissionKG> kgs, const Encoder& encoder, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return cfg_; }
    const std::vector<MissionKG>& kgs() const noexcept { return kgs_; }
    std::size_t missions() const noexcept { return kgs_.size(); }
    std::size_t classes() const noexcept { return kgs_.size() + 1; }

    std::vector<MissionGnnParams>& gnn() noexcept { return gnn_; }
    const std::vector<MissionGnnParams>& gnn() const noexcept { return gnn_; }
    TemporalHeadParams& head() noexcept { return head_; }
    const TemporalHeadParams& head() const noexcept { return head_; }
    const Tensor& concepts(std::size_t m) const { return concepts_.at(m); }

    // Stable names in a fixed order; the order defines optimizer and
    // checkpoint layout.
    std::vector<std::pair<std::string, Tensor*>> named_parameters();
    std::vector<std::pair<std::string, const Tensor*>> named_parameters() const;
    std::vector<Tensor*> parameters();
    std::size_t parameter_count() const;

    // frames [F x E] -> fused tokens [F x M*D].
    Var fused_tokens(Tape& tape, Var frames) const;

    // Class probabilities [B x classes] for B windows whose token rows are
    // picked from the fused tokens of `frames` by `window_rows` (B*A entries).
    Var forward(Tape& tape, Var frames, const std::vector<std::size_t>& window_rows) const;

    // Per-frame probabilities [T x classes] for a whole video.
    Tensor predict_video(const Tensor& frames, std::size_t chunk = 256) const;

    // Single-frame message passing for explanations.
    MissionOutput trace(std::size_t mission, const Tensor& frame) const;

    friend bool operator==(const VarModel&, const VarModel&) = default;

private:
    ModelConfig cfg_;
    std::vector<MissionKG> kgs_;
    std::vector<Tensor> concepts_;
    std::vector<MissionGnnParams> gnn_;
    TemporalHeadParams head_;
};

} // namespace pvvtt
