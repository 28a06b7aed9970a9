#include "pvvtt/eval/baseline.hpp"

#include <cmath>

#include "pvvtt/errors.hpp"

namespace pvvtt {

BaselineMlp BaselineMlp::init(std::size_t E, std::size_t H, std::size_t classes, Rng& rng) {
    return {MlpLayer::init(H, E, rng), MlpLayer::init(classes, H, rng)};
}

Var BaselineMlp::forward(Tape& tape, Var frames) const {
    return tape.softmax(tape.affine(output, tape.gelu(tape.affine(hidden, frames))));
}

Tensor BaselineMlp::predict(const Tensor& frames) const {
    Tape tape;
    return tape.value(forward(tape, tape.constant(frames)));
}

BaselineMlp train_baseline(const Dataset& data, const TrainConfig& cfg, std::size_t hidden,
                           std::ostream* log) {
    cfg.validate();
    if (data.videos.empty()) throw ValidationError("baseline: empty dataset");
    Rng init_rng(cfg.seed, 0xba5e);
    BaselineMlp model = BaselineMlp::init(data.dim(), hidden, data.class_names.size(), init_rng);
    AdamW opt(cfg.optimizer());
    TrainConfig frame_cfg = cfg;
    frame_cfg.mode = SupervisionMode::frame;
    for (std::size_t s = 0; s < cfg.steps; ++s) {
        const Batch b = sample_batch(data, frame_cfg, s);
        Tensor frames({b.videos.size(), data.dim()});
        std::vector<int> labels(b.videos.size());
        for (std::size_t i = 0; i < b.videos.size(); ++i) {
            const auto& v = data.videos[b.videos[i]];
            auto src = v.frames.row(b.frames[i]);
            std::copy(src.begin(), src.end(), frames.row(i).begin());
            labels[i] = v.labels[b.frames[i]];
        }
        Tape tape;
        Var loss = tape.cross_entropy(model.forward(tape, tape.constant(std::move(frames))), std::move(labels));
        const double value = tape.value(loss)[0];
        if (!std::isfinite(value)) throw NonFiniteLossError(s + 1, s);
        opt.step(model.parameters(), tape.backward(loss));
        if (log) *log << to_json_line({s + 1, value, value, 0.0, 1.0}) << '\n';
    }
    return model;
}

} // namespace pvvtt
