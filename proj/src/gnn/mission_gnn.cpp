#include "pvvtt/gnn/mission_gnn.hpp"

#include <algorithm>
#include <cmath>

#include "pvvtt/errors.hpp"

namespace pvvtt {
namespace {

struct Pass {
    std::vector<Var> nodes;
    std::vector<Var> messages;
};

Pass run(Tape& tape, const MissionGnnParams& params, const MissionKG& kg, const Tensor& concepts,
         Var frames) {
    validate(kg);
    const std::size_t n = kg.nodes.size();
    if (concepts.rank() != 2 || concepts.rows() != n || concepts.cols() != params.E()) {
        throw DimensionError("forward_mission: concept features " + concepts.shape_string() +
                             " for " + std::to_string(n) + " nodes of dim " +
                             std::to_string(params.E()));
    }
    if (tape.value(frames).cols() != params.E()) {
        throw DimensionError("forward_mission: frames " + tape.value(frames).shape_string() +
                             " vs input dim " + std::to_string(params.E()));
    }

    Var projected = tape.affine(params.input_proj, tape.constant(concepts));
    std::vector<Var> x(n);
    for (std::size_t v = 0; v < n; ++v) {
        x[v] = kg.nodes[v].level == KgLevel::sensor ? tape.affine(params.input_proj, frames)
                                                    : tape.gather_rows(projected, {v});
    }

    std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_index;
    for (std::size_t e = 0; e < kg.edges.size(); ++e) {
        edge_index[{kg.edges[e].source, kg.edges[e].target}] = e;
    }
    const auto preds = kg.predecessors();

    Pass pass;
    pass.messages.resize(kg.edges.size());
    for (int h = 1; h <= 3; ++h) {
        const auto level = static_cast<KgLevel>(h);
        const MlpLayer& phi = params.phi[h - 1];
        std::vector<std::pair<std::size_t, Var>> updated;
        for (std::size_t v : kg.nodes_at(level)) {
            std::vector<Var> msgs;
            msgs.reserve(preds[v].size());
            for (std::size_t u : preds[v]) {
                Var m = tape.affine(phi, tape.mul(x[v], x[u]));
                pass.messages[edge_index.at({u, v})] = m;
                msgs.push_back(m);
            }
            updated.emplace_back(v, msgs.size() == 1 ? msgs.front() : tape.mean(msgs));
        }
        for (const auto& [v, var] : updated) x[v] = var;
    }
    pass.nodes = std::move(x);
    return pass;
}

} // namespace

void GnnConfig::validate() const {
    if (D == 0) throw ConfigError("gnn: D must be at least 1");
    if (L != 3) throw ConfigError("gnn: L must be 3 (one layer per hierarchy step)");
    if (E == 0) throw ConfigError("gnn: E must be at least 1");
}

MissionGnnParams MissionGnnParams::init(const GnnConfig& cfg, Rng& rng) {
    cfg.validate();
    MissionGnnParams p;
    p.input_proj = MlpLayer::init(cfg.D, cfg.E, rng);
    for (auto& layer : p.phi) layer = MlpLayer::init(cfg.D, cfg.D, rng);
    return p;
}

const EdgeMessage* MessageTrace::find(std::size_t source, std::size_t target) const {
    for (const auto& e : edges) {
        if (e.source == source && e.target == target) return &e;
    }
    return nullptr;
}

const Tensor& ConceptCache::get(const std::string& word) {
    auto it = cache_.find(word);
    if (it == cache_.end()) it = cache_.emplace(word, text_embed(encoder_, word)).first;
    return it->second;
}

Tensor concept_features(const MissionKG& kg, ConceptCache& cache) {
    std::size_t dim = 0;
    std::vector<const Tensor*> rows(kg.nodes.size(), nullptr);
    for (const auto& node : kg.nodes) {
        if (node.level == KgLevel::sensor) continue;
        const std::string& word = node.level == KgLevel::embedding ? kg.mission_name : node.word;
        rows[node.id] = &cache.get(word);
        dim = rows[node.id]->size();
    }
    Tensor out({kg.nodes.size(), dim});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i]) std::copy(rows[i]->data().begin(), rows[i]->data().end(), out.row(i).begin());
    }
    return out;
}

Tensor init_node_features(const MissionKG& kg, const Tensor& frame, ConceptCache& cache) {
    Tensor out = concept_features(kg, cache);
    if (frame.size() != out.cols()) {
        throw DimensionError("init_node_features: frame " + frame.shape_string() +
                             " vs concept dim " + std::to_string(out.cols()));
    }
    std::copy(frame.data().begin(), frame.data().end(), out.row(kg.sensor()).begin());
    return out;
}

Var forward_mission(Tape& tape, const MissionGnnParams& params, const MissionKG& kg,
                    const Tensor& concepts, Var frames, std::vector<Var>* messages) {
    Pass pass = run(tape, params, kg, concepts, frames);
    if (messages) *messages = std::move(pass.messages);
    return pass.nodes[kg.embedding()];
}

MissionOutput forward_mission(const MissionGnnParams& params, const MissionKG& kg,
                              const Tensor& features) {
    if (features.rank() != 2 || features.rows() != kg.nodes.size()) {
        throw DimensionError("forward_mission: features " + features.shape_string() + " for " +
                             std::to_string(kg.nodes.size()) + " nodes");
    }
    Tape tape;
    Var frame = tape.constant(Tensor::matrix(1, features.cols(),
                                             std::vector<double>(features.row(kg.sensor()).begin(),
                                                                 features.row(kg.sensor()).end())));
    Pass pass = run(tape, params, kg, features, frame);

    MissionOutput out;
    out.embedding = Tensor::vector(tape.value(pass.nodes[kg.embedding()]).storage());
    for (std::size_t e = 0; e < kg.edges.size(); ++e) {
        EdgeMessage msg;
        msg.source = kg.edges[e].source;
        msg.target = kg.edges[e].target;
        msg.message = Tensor::vector(tape.value(pass.messages[e]).storage());
        msg.norm = l2_norm(msg.message.data());
        out.trace.edges.push_back(std::move(msg));
    }
    for (Var v : pass.nodes) out.trace.node_features.push_back(Tensor::vector(tape.value(v).storage()));
    return out;
}

Tensor FusedFrameToken::slice(std::size_t m) const {
    if (m >= M) throw IndexError("fused token: mission " + std::to_string(m) + " of " + std::to_string(M));
    return Tensor::vector(std::vector<double>(f.storage().begin() + m * D,
                                              f.storage().begin() + (m + 1) * D));
}

FusedFrameToken fuse(const std::vector<Tensor>& missions) {
    if (missions.empty()) throw DimensionError("fuse: no mission features");
    FusedFrameToken token;
    token.M = missions.size();
    token.D = missions.front().size();
    std::vector<double> flat;
    flat.reserve(token.M * token.D);
    for (const auto& m : missions) {
        if (m.size() != token.D) {
            throw DimensionError("fuse: mission feature " + m.shape_string() + " vs dim " +
                                 std::to_string(token.D));
        }
        flat.insert(flat.end(), m.data().begin(), m.data().end());
    }
    token.f = Tensor::vector(std::move(flat));
    return token;
}

} // namespace pvvtt
