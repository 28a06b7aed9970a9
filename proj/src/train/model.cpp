#include "pvvtt/train/model.hpp"

#include <algorithm>

#include "pvvtt/errors.hpp"

namespace pvvtt {
namespace {

template <class Head, class Gnn, class Out>
void collect(Head& head, Gnn& gnn, Out& out) {
    auto layer = [&](const std::string& name, auto& l) {
        out.emplace_back(name + ".weight", &l.weight);
        out.emplace_back(name + ".bias", &l.bias);
    };
    auto norm = [&](const std::string& name, auto& n) {
        out.emplace_back(name + ".gain", &n.gain);
        out.emplace_back(name + ".bias", &n.bias);
    };
    for (std::size_t m = 0; m < gnn.size(); ++m) {
        const std::string prefix = "gnn." + std::to_string(m) + ".";
        layer(prefix + "input_proj", gnn[m].input_proj);
        for (std::size_t h = 0; h < gnn[m].phi.size(); ++h) {
            layer(prefix + "phi" + std::to_string(h + 1), gnn[m].phi[h]);
        }
    }
    layer("head.token_proj", head.token_proj);
    layer("head.encoder.query", head.encoder.query);
    layer("head.encoder.key", head.encoder.key);
    layer("head.encoder.value", head.encoder.value);
    layer("head.encoder.output", head.encoder.output);
    norm("head.encoder.norm1", head.encoder.norm1);
    layer("head.encoder.ff_in", head.encoder.ff_in);
    layer("head.encoder.ff_out", head.encoder.ff_out);
    norm("head.encoder.norm2", head.encoder.norm2);
    layer("head.output", head.output);
}

} // namespace

VarModel::VarModel(ModelConfig cfg, std::vector<MissionKG> kgs, const Encoder& encoder,
                   std::uint64_t seed)
    : cfg_(std::move(cfg)), kgs_(std::move(kgs)) {
    cfg_.gnn.validate();
    cfg_.temporal.validate();
    if (kgs_.empty()) throw ValidationError("model: no mission KGs");
    if (encoder.dim() != cfg_.gnn.E) {
        throw ValidationError("model: encoder dim " + std::to_string(encoder.dim()) +
                              " differs from input dim " + std::to_string(cfg_.gnn.E));
    }
    ConceptCache cache(&encoder);
    for (std::size_t m = 0; m < kgs_.size(); ++m) {
        if (kgs_[m].mission_id != static_cast<int>(m)) {
            throw ValidationError("model: KG at position " + std::to_string(m) + " has mission_id " +
                                  std::to_string(kgs_[m].mission_id));
        }
        validate(kgs_[m]);
        concepts_.push_back(concept_features(kgs_[m], cache));
    }
    Rng rng(seed);
    for (std::size_t m = 0; m < kgs_.size(); ++m) gnn_.push_back(MissionGnnParams::init(cfg_.gnn, rng));
    head_ = TemporalHeadParams::init(cfg_.temporal, kgs_.size() * cfg_.gnn.D, kgs_.size() + 1, rng);
}

std::vector<std::pair<std::string, Tensor*>> VarModel::named_parameters() {
    std::vector<std::pair<std::string, Tensor*>> out;
    collect(head_, gnn_, out);
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> VarModel::named_parameters() const {
    std::vector<std::pair<std::string, const Tensor*>> out;
    collect(head_, gnn_, out);
    return out;
}

std::vector<Tensor*> VarModel::parameters() {
    std::vector<Tensor*> out;
    for (auto& [name, p] : named_parameters()) out.push_back(p);
    return out;
}

std::size_t VarModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : named_parameters()) n += p->size();
    return n;
}

Var VarModel::fused_tokens(Tape& tape, Var frames) const {
    std::vector<Var> per_mission;
    per_mission.reserve(kgs_.size());
    for (std::size_t m = 0; m < kgs_.size(); ++m) {
        per_mission.push_back(forward_mission(tape, gnn_[m], kgs_[m], concepts_[m], frames));
    }
    return per_mission.size() == 1 ? per_mission.front() : tape.concat(per_mission);
}

Var VarModel::forward(Tape& tape, Var frames, const std::vector<std::size_t>& window_rows) const {
    const std::size_t A = cfg_.temporal.window;
    if (window_rows.empty() || window_rows.size() % A != 0) {
        throw DimensionError("model: " + std::to_string(window_rows.size()) +
                             " window rows is not a multiple of A = " + std::to_string(A));
    }
    Var fused = fused_tokens(tape, frames);
    Var windows = tape.gather_rows(fused, window_rows);
    return classify_batch(tape, head_, cfg_.temporal, windows, window_rows.size() / A);
}

Tensor VarModel::predict_video(const Tensor& frames, std::size_t chunk) const {
    if (frames.rank() != 2 || frames.cols() != cfg_.gnn.E) {
        throw DimensionError("predict: frames " + frames.shape_string() + " vs input dim " +
                             std::to_string(cfg_.gnn.E));
    }
    const std::size_t T = frames.rows();
    const std::size_t A = cfg_.temporal.window;
    Tensor fused;
    {
        Tape tape;
        fused = tape.value(fused_tokens(tape, tape.constant(frames)));
    }
    Tensor probs({T, classes()});
    chunk = std::max<std::size_t>(chunk, 1);
    for (std::size_t begin = 0; begin < T; begin += chunk) {
        const std::size_t end = std::min(T, begin + chunk);
        std::vector<std::size_t> rows;
        rows.reserve((end - begin) * A);
        for (std::size_t t = begin; t < end; ++t) {
            for (std::size_t i : window_indices(t, A)) rows.push_back(i);
        }
        Tape tape;
        Var windows = tape.gather_rows(tape.constant(fused), std::move(rows));
        const Tensor& p = tape.value(classify_batch(tape, head_, cfg_.temporal, windows, end - begin));
        std::copy(p.storage().begin(), p.storage().end(),
                  probs.storage().begin() + begin * classes());
    }
    return probs;
}

MissionOutput VarModel::trace(std::size_t mission, const Tensor& frame) const {
    const MissionKG& kg = kgs_.at(mission);
    Tensor features = concepts_[mission];
    if (frame.size() != features.cols()) {
        throw DimensionError("trace: frame " + frame.shape_string() + " vs input dim " +
                             std::to_string(features.cols()));
    }
    std::copy(frame.data().begin(), frame.data().end(), features.row(kg.sensor()).begin());
    return forward_mission(gnn_[mission], kg, features);
}

} // namespace pvvtt
