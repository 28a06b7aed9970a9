#pragma once

#include <cstdint>
#include <ostream>

#include "pvvtt/core/mlp.hpp"
#include "pvvtt/core/tape.hpp"
#include "pvvtt/embed/video_io.hpp"
#include "pvvtt/train/trainer.hpp"

namespace pvvtt {

// Per-frame classifier on raw embeddings: E -> H (GELU) -> classes.
struct BaselineMlp {
    MlpLayer hidden;
    MlpLayer output;

    static BaselineMlp init(std::size_t E, std::size_t H, std::size_t classes, Rng& rng);

    Var forward(Tape& tape, Var frames) const;
    // [T x classes]
    Tensor predict(const Tensor& frames) const;
    std::vector<Tensor*> parameters() { return {&hidden.weight, &hidden.bias, &output.weight, &output.bias}; }

    friend bool operator==(const BaselineMlp&, const BaselineMlp&) = default;
};

// Same optimizer and cross-entropy as the main model, frame-level samples,
// no KG and no temporal window. Only the frame-mode fields of `cfg` apply.
BaselineMlp train_baseline(const Dataset& data, const TrainConfig& cfg, std::size_t hidden = 128,
                           std::ostream* log = nullptr);

} // namespace pvvtt
