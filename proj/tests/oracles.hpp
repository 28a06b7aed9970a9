#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. They share no code with the library beyond plain data types.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "pvvtt/gnn/mission_gnn.hpp"
#include "pvvtt/kg/kg.hpp"
#include "pvvtt/reason/reason.hpp"

namespace pvvtt::oracle {

inline std::vector<double> matvec(const MlpLayer& layer, const std::vector<double>& x) {
    const std::size_t out = layer.out_dim();
    const std::size_t in = layer.in_dim();
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
        double acc = layer.bias[o];
        for (std::size_t i = 0; i < in; ++i) acc += layer.weight[o * in + i] * x[i];
        y[o] = acc;
    }
    return y;
}

// Per-node recursion: a level-0 node is its projected initial feature; a
// level-h node is the mean over its predecessors u of
// phi_h(projected(v) * final(u)).
struct NaiveGnn {
    const MissionGnnParams& params;
    const MissionKG& kg;
    std::vector<std::vector<double>> projected;
    std::map<std::size_t, std::vector<double>> memo;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> messages;

    NaiveGnn(const MissionGnnParams& p, const MissionKG& g, const Tensor& features) : params(p), kg(g) {
        for (std::size_t v = 0; v < kg.nodes.size(); ++v) {
            auto row = features.row(v);
            projected.push_back(matvec(params.input_proj, std::vector<double>(row.begin(), row.end())));
        }
    }

    const std::vector<double>& final_feature(std::size_t v) {
        if (auto it = memo.find(v); it != memo.end()) return it->second;
        const int level = static_cast<int>(kg.nodes[v].level);
        if (level == 0) return memo[v] = projected[v];
        std::vector<std::size_t> preds;
        for (const auto& e : kg.edges) {
            if (e.target == v) preds.push_back(e.source);
        }
        std::vector<double> acc(params.D(), 0.0);
        for (std::size_t u : preds) {
            const std::vector<double> xu = final_feature(u);
            std::vector<double> prod(params.D());
            for (std::size_t d = 0; d < prod.size(); ++d) prod[d] = projected[v][d] * xu[d];
            const auto m = matvec(params.phi[level - 1], prod);
            messages[{u, v}] = m;
            for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += m[d];
        }
        for (double& a : acc) a /= static_cast<double>(preds.size());
        return memo[v] = acc;
    }
};

struct Path {
    std::vector<std::size_t> nodes;
    std::vector<std::string> words;
    double impact = 0.0;
};

// Every sensor-to-embedding path with its summed weight.
inline std::vector<Path> all_paths(const WeightedDag& dag) {
    const MissionKG& kg = dag.kg;
    std::vector<Path> out;
    for (std::size_t e1 = 0; e1 < kg.edges.size(); ++e1) {
        if (kg.edges[e1].source != kg.sensor()) continue;
        for (std::size_t e2 = 0; e2 < kg.edges.size(); ++e2) {
            if (kg.edges[e2].source != kg.edges[e1].target) continue;
            for (std::size_t e3 = 0; e3 < kg.edges.size(); ++e3) {
                if (kg.edges[e3].source != kg.edges[e2].target) continue;
                Path p;
                p.nodes = {kg.edges[e1].source, kg.edges[e1].target, kg.edges[e2].target, kg.edges[e3].target};
                for (std::size_t n : p.nodes) p.words.push_back(kg.nodes[n].word);
                p.impact = dag.weights[e1] + dag.weights[e2] + dag.weights[e3];
                out.push_back(std::move(p));
            }
        }
    }
    return out;
}

// Full sort under the documented ranking, then the first k.
inline std::vector<Path> brute_top_k(const WeightedDag& dag, std::size_t k) {
    auto paths = all_paths(dag);
    std::sort(paths.begin(), paths.end(), [](const Path& a, const Path& b) {
        if (a.impact != b.impact) return a.impact > b.impact;
        if (a.words != b.words) return a.words < b.words;
        return a.nodes < b.nodes;
    });
    if (paths.size() > k) paths.resize(k);
    return paths;
}

// P(score_pos > score_neg) + 0.5 P(equal) over all pairs.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<bool>& positives) {
    long long wins2 = 0, pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!positives[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (positives[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins2 += 2;
            else if (scores[i] == scores[j]) wins2 += 1;
        }
    }
    return static_cast<double>(wins2) / (2.0 * static_cast<double>(pairs));
}

} // namespace pvvtt::oracle
