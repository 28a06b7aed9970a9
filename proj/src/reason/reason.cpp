#include "pvvtt/reason/reason.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <tuple>

#include "pvvtt/errors.hpp"

namespace pvvtt {
namespace {

void search(const WeightedDag& dag, const std::vector<std::vector<std::size_t>>& out_edges,
            std::size_t node, ReasoningPath& current, std::size_t k,
            std::vector<ReasoningPath>& best) {
    const auto& kg = dag.kg;
    if (kg.nodes[node].level == KgLevel::embedding) {
        if (best.size() < k) {
            best.push_back(current);
            return;
        }
        auto worst = std::max_element(best.begin(), best.end(), ranks_before);
        if (ranks_before(current, *worst)) *worst = current;
        return;
    }
    for (std::size_t e : out_edges[node]) {
        const std::size_t next = kg.edges[e].target;
        const double before = current.impact;
        current.nodes.push_back(next);
        current.words.push_back(kg.nodes[next].word);
        current.impact = before + dag.weights[e];
        search(dag, out_edges, next, current, k, best);
        current.impact = before;
        current.nodes.pop_back();
        current.words.pop_back();
    }
}

} // namespace

double WeightedDag::weight(std::size_t source, std::size_t target) const {
    for (std::size_t e = 0; e < kg.edges.size(); ++e) {
        if (kg.edges[e].source == source && kg.edges[e].target == target) return weights[e];
    }
    throw IndexError("weighted dag: no edge " + std::to_string(source) + " -> " + std::to_string(target));
}

double WeightedDag::level_sum(KgLevel level) const {
    double s = 0.0;
    for (std::size_t e = 0; e < kg.edges.size(); ++e) {
        if (kg.nodes[kg.edges[e].target].level == level) s += weights[e];
    }
    return s;
}

WeightedDag build_weighted_dag(const MissionKG& kg, const std::vector<MessageTrace>& traces) {
    validate(kg);
    if (traces.empty()) throw ValidationError("weighted dag: no message traces");
    std::vector<double> norms(kg.edges.size(), 0.0);
    for (const auto& trace : traces) {
        if (trace.edges.size() != kg.edges.size()) {
            throw ValidationError("weighted dag: trace has " + std::to_string(trace.edges.size()) +
                                  " edges, KG has " + std::to_string(kg.edges.size()));
        }
        for (std::size_t e = 0; e < kg.edges.size(); ++e) {
            const auto& m = trace.edges[e];
            if (m.source != kg.edges[e].source || m.target != kg.edges[e].target) {
                throw ValidationError("weighted dag: trace edge order differs from the KG");
            }
            norms[e] += m.norm;
        }
    }
    for (double& n : norms) n /= static_cast<double>(traces.size());

    std::array<double, 4> totals{};
    for (std::size_t e = 0; e < kg.edges.size(); ++e) {
        totals[static_cast<int>(kg.nodes[kg.edges[e].target].level)] += norms[e];
    }
    for (int h = 1; h <= 3; ++h) {
        if (!(totals[h] > 0.0)) {
            throw DegenerateLevelError("mission '" + kg.mission_name + "': all message norms into level " +
                                       std::to_string(h) + " are zero");
        }
    }
    WeightedDag dag;
    dag.kg = kg;
    dag.weights.resize(kg.edges.size());
    for (std::size_t e = 0; e < kg.edges.size(); ++e) {
        dag.weights[e] = norms[e] / totals[static_cast<int>(kg.nodes[kg.edges[e].target].level)];
    }
    return dag;
}

WeightedDag build_weighted_dag(const MissionKG& kg, const MessageTrace& trace) {
    return build_weighted_dag(kg, std::vector<MessageTrace>{trace});
}

bool ranks_before(const ReasoningPath& a, const ReasoningPath& b) {
    if (a.impact != b.impact) return a.impact > b.impact;
    return std::tie(a.words, a.nodes) < std::tie(b.words, b.nodes);
}

std::vector<ReasoningPath> top_k_paths(const WeightedDag& dag, std::size_t k) {
    if (k == 0) throw ConfigError("top_k_paths: k must be at least 1");
    const auto& kg = dag.kg;
    if (dag.weights.size() != kg.edges.size()) {
        throw ValidationError("top_k_paths: " + std::to_string(dag.weights.size()) + " weights for " +
                              std::to_string(kg.edges.size()) + " edges");
    }
    std::vector<std::vector<std::size_t>> out_edges(kg.nodes.size());
    for (std::size_t e = 0; e < kg.edges.size(); ++e) out_edges[kg.edges[e].source].push_back(e);

    std::vector<ReasoningPath> best;
    ReasoningPath current;
    const std::size_t s = kg.sensor();
    current.nodes.push_back(s);
    current.words.push_back(kg.nodes[s].word);
    search(dag, out_edges, s, current, k, best);
    std::sort(best.begin(), best.end(), ranks_before);
    return best;
}

std::vector<std::string> render_paths(const std::vector<ReasoningPath>& paths, const std::string&) {
    std::vector<std::string> lines;
    lines.reserve(paths.size());
    for (const auto& p : paths) {
        if (p.words.size() < 3) throw ValidationError("render_paths: path too short");
        char impact[32];
        std::snprintf(impact, sizeof impact, "%.3f", p.impact);
        lines.push_back(std::string(kSensorWord) + " → '" + p.words[1] + "' → '" + p.words[2] +
                        "' (impact " + impact + ")");
    }
    return lines;
}

nlohmann::ordered_json to_json(const Explanation& e) {
    nlohmann::ordered_json j;
    j["video_id"] = e.video_id;
    j["predicted_class"] = e.predicted_class;
    j["frame_index"] = e.frame_index;
    j["paths"] = nlohmann::ordered_json::array();
    for (const auto& p : e.paths) j["paths"].push_back({{"nodes", p.words}, {"impact", p.impact}});
    return j;
}

} // namespace pvvtt
