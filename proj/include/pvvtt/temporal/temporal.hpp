#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pvvtt/core/mlp.hpp"
#include "pvvtt/core/tape.hpp"
#include "pvvtt/core/transformer.hpp"

namespace pvvtt {

struct TemporalConfig {
    std::size_t window = 16;  // A
    std::size_t model_dim = 128;
    std::size_t heads = 8;
    std::size_t ff_mult = 4;
    bool positional_encoding = true;

    void validate() const;

    friend bool operator==(const TemporalConfig&, const TemporalConfig&) = default;
};

struct TemporalHeadParams {
    MlpLayer token_proj;  // [M*D -> model_dim]
    EncoderLayerParams encoder;
    MlpLayer output;  // [model_dim -> classes]

    std::size_t classes() const noexcept { return output.out_dim(); }
    std::size_t token_dim() const noexcept { return token_proj.in_dim(); }

    static TemporalHeadParams init(const TemporalConfig& cfg, std::size_t token_dim,
                                   std::size_t classes, Rng& rng);

    friend bool operator==(const TemporalHeadParams&, const TemporalHeadParams&) = default;
};

struct TokenWindow {
    std::size_t A = 0;
    std::vector<Tensor> tokens;
};

// Source index of each window position for frame t: t-A+1 .. t, with
// positions before the first frame repeating frame 0.
std::vector<std::size_t> window_indices(std::size_t t, std::size_t A);

// Throws IndexError for t outside the sequence.
TokenWindow make_window(const std::vector<Tensor>& sequence, std::size_t t, std::size_t A);

// Sinusoidal encodings [length x dim].
Tensor positional_encoding(std::size_t length, std::size_t dim);

// windows: [batches*A x token_dim], A consecutive rows per window. Returns
// class probabilities [batches x classes].
Var classify_batch(Tape& tape, const TemporalHeadParams& params, const TemporalConfig& cfg,
                   Var windows, std::size_t batches);

struct ClassDistribution {
    Tensor probs;
    std::vector<std::string> class_names;

    std::size_t argmax() const;
};

ClassDistribution classify(const TemporalHeadParams& params, const TemporalConfig& cfg,
                           const TokenWindow& window,
                           const std::vector<std::string>& class_names = {});

} // namespace pvvtt
