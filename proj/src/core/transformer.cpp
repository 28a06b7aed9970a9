#include "pvvtt/core/transformer.hpp"

#include "pvvtt/errors.hpp"

namespace pvvtt {
namespace {

void check_tokens(const EncoderLayerParams& p, const Tensor& tokens, std::size_t batches) {
    if (tokens.cols() != p.model_dim()) {
        throw DimensionError("encoder layer: token dim " + std::to_string(tokens.cols()) +
                             " != model dim " + std::to_string(p.model_dim()));
    }
    if (batches == 0 || tokens.rows() % batches != 0) {
        throw DimensionError("encoder layer: " + tokens.shape_string() + " does not split into " +
                             std::to_string(batches) + " sequences");
    }
}

Var feed_forward_block(Tape& tape, const EncoderLayerParams& p, Var h) {
    Var ff = tape.affine(p.ff_out, tape.gelu(tape.affine(p.ff_in, h)));
    return tape.layer_norm(tape.add(h, ff), p.norm2);
}

} // namespace

EncoderLayerParams EncoderLayerParams::init(std::size_t model_dim, std::size_t heads,
                                            std::size_t ff_dim, Rng& rng) {
    if (heads == 0 || model_dim % heads != 0) {
        throw DimensionError("encoder layer: model dim " + std::to_string(model_dim) +
                             " not divisible by " + std::to_string(heads) + " heads");
    }
    EncoderLayerParams p;
    p.heads = heads;
    p.query = MlpLayer::init(model_dim, model_dim, rng);
    p.key = MlpLayer::init(model_dim, model_dim, rng);
    p.value = MlpLayer::init(model_dim, model_dim, rng);
    p.output = MlpLayer::init(model_dim, model_dim, rng);
    p.norm1 = LayerNormParams::init(model_dim);
    p.ff_in = MlpLayer::init(ff_dim, model_dim, rng);
    p.ff_out = MlpLayer::init(model_dim, ff_dim, rng);
    p.norm2 = LayerNormParams::init(model_dim);
    return p;
}

Var encoder_layer(Tape& tape, const EncoderLayerParams& p, Var tokens, std::size_t batches,
                  Tensor* attention_weights) {
    check_tokens(p, tape.value(tokens), batches);
    Var q = tape.affine(p.query, tokens);
    Var k = tape.affine(p.key, tokens);
    Var v = tape.affine(p.value, tokens);
    Var att = tape.affine(p.output, tape.attention(q, k, v, batches, p.heads, attention_weights));
    Var h = tape.layer_norm(tape.add(tokens, att), p.norm1);
    return feed_forward_block(tape, p, h);
}

Var encoder_layer_last(Tape& tape, const EncoderLayerParams& p, Var tokens, std::size_t batches) {
    const Tensor& x = tape.value(tokens);
    check_tokens(p, x, batches);
    const std::size_t len = x.rows() / batches;
    std::vector<std::size_t> last(batches);
    for (std::size_t b = 0; b < batches; ++b) last[b] = b * len + len - 1;
    Var x_last = tape.gather_rows(tokens, std::move(last));
    Var q = tape.affine(p.query, x_last);
    Var k = tape.affine(p.key, tokens);
    Var v = tape.affine(p.value, tokens);
    Var att = tape.affine(p.output, tape.attention(q, k, v, batches, p.heads));
    Var h = tape.layer_norm(tape.add(x_last, att), p.norm1);
    return feed_forward_block(tape, p, h);
}

std::vector<Tensor> transformer_encoder_layer(const EncoderLayerParams& p,
                                              const std::vector<Tensor>& tokens,
                                              Tensor* attention_weights) {
    if (tokens.empty()) throw DimensionError("encoder layer: empty token sequence");
    std::vector<double> flat;
    for (const auto& t : tokens) {
        if (t.size() != p.model_dim()) {
            throw DimensionError("encoder layer: token " + t.shape_string() + " vs model dim " +
                                 std::to_string(p.model_dim()));
        }
        flat.insert(flat.end(), t.data().begin(), t.data().end());
    }
    Tape tape;
    Var x = tape.constant(Tensor::matrix(tokens.size(), p.model_dim(), std::move(flat)));
    const Tensor& y = tape.value(encoder_layer(tape, p, x, 1, attention_weights));
    std::vector<Tensor> out;
    out.reserve(tokens.size());
    for (std::size_t r = 0; r < y.rows(); ++r) out.push_back(y.row_tensor(r));
    return out;
}

} // namespace pvvtt
