#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

#include "pvvtt/gnn/mission_gnn.hpp"
#include "pvvtt/kg/kg.hpp"

namespace pvvtt {

// A mission KG with one weight per edge (same order as kg.edges). Weights of
// each hierarchy transition sum to one.
struct WeightedDag {
    MissionKG kg;
    std::vector<double> weights;

    double weight(std::size_t source, std::size_t target) const;
    // Sum of the weights of edges entering `level` (1..3).
    double level_sum(KgLevel level) const;
};

// w_uv = |m_uv| / sum of |m| over the edges of the same transition. With
// several traces the norms are averaged per edge first. DegenerateLevelError
// when a transition has zero total norm.
WeightedDag build_weighted_dag(const MissionKG& kg, const std::vector<MessageTrace>& traces);
WeightedDag build_weighted_dag(const MissionKG& kg, const MessageTrace& trace);

struct ReasoningPath {
    std::vector<std::size_t> nodes;  // sensor, key, association, embedding
    std::vector<std::string> words;
    double impact = 0.0;

    friend bool operator==(const ReasoningPath&, const ReasoningPath&) = default;
};

// Ranking used everywhere: higher impact first, then lexicographically
// smaller word chain, then smaller node ids.
bool ranks_before(const ReasoningPath& a, const ReasoningPath& b);

// Depth-first search from the sensor keeping the k best completed paths.
// Returns them best first. k larger than the path count returns every path.
std::vector<ReasoningPath> top_k_paths(const WeightedDag& dag, std::size_t k);

// "frame → '<key>' → '<association>' (impact 0.412)" per path.
std::vector<std::string> render_paths(const std::vector<ReasoningPath>& paths,
                                      const std::string& mission_name = {});

struct Explanation {
    std::string video_id;
    std::string predicted_class;
    std::size_t frame_index = 0;
    std::vector<ReasoningPath> paths;
};

nlohmann::ordered_json to_json(const Explanation& e);

} // namespace pvvtt
