#pragma once

#include <cstddef>
#include <vector>

#include "pvvtt/core/mlp.hpp"
#include "pvvtt/core/tape.hpp"

namespace pvvtt {

// One post-norm encoder layer: self-attention -> add & norm -> feed-forward
// (GELU) -> add & norm. No dropout.
struct EncoderLayerParams {
    std::size_t heads = 8;
    MlpLayer query;
    MlpLayer key;
    MlpLayer value;
    MlpLayer output;
    LayerNormParams norm1;
    MlpLayer ff_in;
    MlpLayer ff_out;
    LayerNormParams norm2;

    std::size_t model_dim() const noexcept { return query.in_dim(); }

    static EncoderLayerParams init(std::size_t model_dim, std::size_t heads, std::size_t ff_dim,
                                   Rng& rng);

    friend bool operator==(const EncoderLayerParams&, const EncoderLayerParams&) = default;
};

// tokens: [batches*L x d], each batch's L rows contiguous. Returns every
// position. `attention_weights` receives [batches*heads*L x L] when non-null.
Var encoder_layer(Tape& tape, const EncoderLayerParams& p, Var tokens, std::size_t batches,
                  Tensor* attention_weights = nullptr);

// Same layer evaluated for the last position of each batch only: [batches x d].
// Equal to the last rows of encoder_layer().
Var encoder_layer_last(Tape& tape, const EncoderLayerParams& p, Var tokens, std::size_t batches);

// Value-only convenience for a single sequence.
std::vector<Tensor> transformer_encoder_layer(const EncoderLayerParams& p,
                                              const std::vector<Tensor>& tokens,
                                              Tensor* attention_weights = nullptr);

} // namespace pvvtt
