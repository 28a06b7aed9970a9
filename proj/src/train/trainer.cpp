#include "pvvtt/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"

#include "pvvtt/core/random.hpp"
#include "pvvtt/errors.hpp"

namespace pvvtt {

std::string to_string(SupervisionMode mode) {
    return mode == SupervisionMode::frame ? "frame" : "video";
}

SupervisionMode supervision_mode_from_string(const std::string& text) {
    if (text == "frame") return SupervisionMode::frame;
    if (text == "video") return SupervisionMode::video;
    throw ConfigError("unknown supervision mode '" + text + "' (expected frame or video)");
}

void TrainConfig::validate() const {
    if (!(lr >= 0.0) || !(weight_decay >= 0.0)) throw ConfigError("train: lr and weight_decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("train: betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be positive");
    if (batch == 0) throw ConfigError("train: batch must be positive");
    if (!(alpha_d > 0.0 && alpha_d <= 1.0)) throw ConfigError("train: alpha_d must lie in (0, 1]");
    if (!(lambda_smooth >= 0.0)) throw ConfigError("train: lambda_smooth must be >= 0");
    if (run_length == 0) throw ConfigError("train: run_length must be positive");
}

std::string to_json_line(const StepLog& log) {
    nlohmann::ordered_json j;
    j["step"] = log.step;
    j["loss"] = log.loss;
    j["ce"] = log.ce;
    j["smooth"] = log.smooth;
    j["theta"] = log.theta;
    return j.dump();
}

Batch sample_batch(const Dataset& data, const TrainConfig& cfg, std::size_t step) {
    if (data.videos.empty()) throw ValidationError("train: empty dataset");
    Rng rng(cfg.seed, step);
    Batch b;
    if (cfg.mode == SupervisionMode::frame) {
        std::vector<std::size_t> offsets;
        std::size_t total = 0;
        for (const auto& v : data.videos) {
            offsets.push_back(total);
            total += v.frame_count();
        }
        for (std::size_t i = 0; i < cfg.batch; ++i) {
            const std::size_t k = rng.below(total);
            const auto it = std::upper_bound(offsets.begin(), offsets.end(), k);
            const auto v = static_cast<std::size_t>(it - offsets.begin()) - 1;
            b.videos.push_back(v);
            b.frames.push_back(k - offsets[v]);
        }
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> first;
        for (std::size_t i = 0; i < cfg.batch; ++i) first.try_emplace({b.videos[i], b.frames[i]}, i);
        for (std::size_t i = 0; i < cfg.batch; ++i) {
            auto it = first.find({b.videos[i], b.frames[i] + 1});
            if (it != first.end()) b.adjacent.emplace_back(i, it->second);
        }
    } else {
        while (b.videos.size() < cfg.batch) {
            const std::size_t v = rng.below(data.videos.size());
            const std::size_t T = data.videos[v].frame_count();
            const std::size_t len = std::min({cfg.run_length, T, cfg.batch - b.videos.size()});
            const std::size_t start = rng.below(T - len + 1);
            for (std::size_t k = 0; k < len; ++k) {
                if (k > 0) b.adjacent.emplace_back(b.videos.size() - 1, b.videos.size());
                b.videos.push_back(v);
                b.frames.push_back(start + k);
            }
        }
    }
    return b;
}

Trainer::Trainer(const Dataset& data, VarModel model, TrainConfig cfg)
    : data_(data), model_(std::move(model)), cfg_(cfg), opt_(cfg.optimizer()),
      threshold_(cfg.alpha_d) {
    cfg_.validate();
    if (data_.videos.empty()) throw ValidationError("train: empty dataset");
    if (data_.dim() != model_.config().gnn.E) {
        throw ValidationError("train: dataset dim " + std::to_string(data_.dim()) +
                              " differs from model input dim " +
                              std::to_string(model_.config().gnn.E));
    }
    if (data_.class_names.size() != model_.classes()) {
        throw ValidationError("train: dataset has " + std::to_string(data_.class_names.size()) +
                              " classes, model " + std::to_string(model_.classes()));
    }
}

LossTerms batch_loss(Tape& tape, const VarModel& model, const Dataset& data, const Batch& b,
                     const TrainConfig& cfg, double theta) {
    const std::size_t A = model.config().temporal.window;
    const std::size_t E = model.config().gnn.E;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> row_of;
    for (std::size_t i = 0; i < b.videos.size(); ++i) {
        for (std::size_t t : window_indices(b.frames[i], A)) row_of.try_emplace({b.videos[i], t}, 0);
    }
    Tensor frames({row_of.size(), E});
    std::size_t next = 0;
    for (auto& [key, row] : row_of) {
        row = next++;
        auto src = data.videos[key.first].frames.row(key.second);
        std::copy(src.begin(), src.end(), frames.row(row).begin());
    }
    std::vector<std::size_t> window_rows;
    window_rows.reserve(b.videos.size() * A);
    for (std::size_t i = 0; i < b.videos.size(); ++i) {
        for (std::size_t t : window_indices(b.frames[i], A)) window_rows.push_back(row_of.at({b.videos[i], t}));
    }

    LossTerms out;
    out.probs = model.forward(tape, tape.constant(std::move(frames)), window_rows);
    std::vector<int> labels(b.videos.size());
    if (cfg.mode == SupervisionMode::frame) {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            labels[i] = data.videos[b.videos[i]].labels[b.frames[i]];
        }
    } else {
        const Tensor& p = tape.value(out.probs);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const Tensor row = Tensor::matrix(1, p.cols(), std::vector<double>(p.row(i).begin(), p.row(i).end()));
            labels[i] = decayed_threshold_pseudolabels(row, data.videos[b.videos[i]].video_label(), theta)[0];
        }
    }
    out.ce = tape.cross_entropy(out.probs, std::move(labels));
    out.smooth = tape.pair_squared_distance(out.probs, b.adjacent);
    out.loss = tape.linear_combination(out.ce, 1.0, out.smooth, cfg.lambda_smooth);
    return out;
}

StepLog Trainer::step() {
    const std::size_t batch_id = opt_.steps();
    const Batch b = sample_batch(data_, cfg_, batch_id);
    Tape tape;
    const LossTerms terms = batch_loss(tape, model_, data_, b, cfg_, threshold_.theta());
    const Var loss = terms.loss, ce = terms.ce, smooth = terms.smooth;

    StepLog log;
    log.step = batch_id + 1;
    log.loss = tape.value(loss)[0];
    log.ce = tape.value(ce)[0];
    log.smooth = tape.value(smooth)[0];
    if (!std::isfinite(log.loss)) throw NonFiniteLossError(log.step, batch_id);

    const Gradients grads = tape.backward(loss);
    opt_.step(model_.parameters(), grads);
    threshold_.step();
    log.theta = threshold_.theta();
    return log;
}

void Trainer::run(std::ostream* log) {
    while (opt_.steps() < cfg_.steps) {
        const StepLog s = step();
        if (log) *log << to_json_line(s) << '\n';
    }
    if (log) log->flush();
}

void Trainer::restore(std::size_t step, double theta, std::vector<Tensor> m, std::vector<Tensor> v) {
    opt_.restore(step, std::move(m), std::move(v));
    threshold_ = DecayingThreshold(cfg_.alpha_d, theta);
}

} // namespace pvvtt
