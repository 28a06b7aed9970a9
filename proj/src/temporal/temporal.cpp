#include "pvvtt/temporal/temporal.hpp"

#include <algorithm>
#include <cmath>

#include "pvvtt/errors.hpp"

namespace pvvtt {

void TemporalConfig::validate() const {
    if (window == 0) throw ConfigError("temporal: window must be at least 1");
    if (heads == 0 || model_dim % heads != 0) {
        throw ConfigError("temporal: model_dim " + std::to_string(model_dim) +
                          " is not divisible by " + std::to_string(heads) + " heads");
    }
    if (ff_mult == 0) throw ConfigError("temporal: ff_mult must be at least 1");
}

TemporalHeadParams TemporalHeadParams::init(const TemporalConfig& cfg, std::size_t token_dim,
                                            std::size_t classes, Rng& rng) {
    cfg.validate();
    TemporalHeadParams p;
    p.token_proj = MlpLayer::init(cfg.model_dim, token_dim, rng);
    p.encoder = EncoderLayerParams::init(cfg.model_dim, cfg.heads, cfg.ff_mult * cfg.model_dim, rng);
    p.output = MlpLayer::init(classes, cfg.model_dim, rng);
    return p;
}

std::vector<std::size_t> window_indices(std::size_t t, std::size_t A) {
    std::vector<std::size_t> idx(A);
    for (std::size_t j = 0; j < A; ++j) {
        const std::size_t back = A - 1 - j;
        idx[j] = t >= back ? t - back : 0;
    }
    return idx;
}

TokenWindow make_window(const std::vector<Tensor>& sequence, std::size_t t, std::size_t A) {
    if (A == 0) throw ConfigError("make_window: A must be at least 1");
    if (t >= sequence.size()) {
        throw IndexError("make_window: t = " + std::to_string(t) + " outside a sequence of " +
                         std::to_string(sequence.size()));
    }
    TokenWindow w;
    w.A = A;
    for (std::size_t i : window_indices(t, A)) w.tokens.push_back(sequence[i]);
    return w;
}

Tensor positional_encoding(std::size_t length, std::size_t dim) {
    Tensor pe({length, dim});
    for (std::size_t pos = 0; pos < length; ++pos) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double rate = std::pow(10000.0, static_cast<double>(i - i % 2) / static_cast<double>(dim));
            const double angle = static_cast<double>(pos) / rate;
            pe.at(pos, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

Var classify_batch(Tape& tape, const TemporalHeadParams& params, const TemporalConfig& cfg,
                   Var windows, std::size_t batches) {
    const Tensor& w = tape.value(windows);
    if (w.cols() != params.token_dim()) {
        throw DimensionError("classify: tokens " + w.shape_string() + " vs token dim " +
                             std::to_string(params.token_dim()));
    }
    if (batches == 0 || w.rows() != batches * cfg.window) {
        throw DimensionError("classify: " + w.shape_string() + " is not " +
                             std::to_string(batches) + " windows of " + std::to_string(cfg.window));
    }
    Var tokens = tape.affine(params.token_proj, windows);
    if (cfg.positional_encoding) {
        const Tensor pe = positional_encoding(cfg.window, cfg.model_dim);
        Tensor tiled({batches * cfg.window, cfg.model_dim});
        for (std::size_t b = 0; b < batches; ++b) {
            std::copy(pe.storage().begin(), pe.storage().end(),
                      tiled.storage().begin() + b * pe.size());
        }
        tokens = tape.add(tokens, tape.constant(std::move(tiled)));
    }
    Var last = encoder_layer_last(tape, params.encoder, tokens, batches);
    return tape.softmax(tape.affine(params.output, last));
}

std::size_t ClassDistribution::argmax() const {
    const auto d = probs.data();
    return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

ClassDistribution classify(const TemporalHeadParams& params, const TemporalConfig& cfg,
                           const TokenWindow& window, const std::vector<std::string>& class_names) {
    if (window.tokens.size() != cfg.window) {
        throw DimensionError("classify: window of " + std::to_string(window.tokens.size()) +
                             " tokens, expected " + std::to_string(cfg.window));
    }
    std::vector<double> flat;
    for (const auto& t : window.tokens) {
        if (t.size() != params.token_dim()) {
            throw DimensionError("classify: token " + t.shape_string() + " vs token dim " +
                                 std::to_string(params.token_dim()));
        }
        flat.insert(flat.end(), t.data().begin(), t.data().end());
    }
    Tape tape;
    Var x = tape.constant(Tensor::matrix(cfg.window, params.token_dim(), std::move(flat)));
    const Tensor& p = tape.value(classify_batch(tape, params, cfg, x, 1));
    return {Tensor::vector(p.storage()), class_names};
}

} // namespace pvvtt
