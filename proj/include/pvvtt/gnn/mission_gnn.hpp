#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "pvvtt/core/mlp.hpp"
#include "pvvtt/core/tape.hpp"
#include "pvvtt/embed/encoder.hpp"
#include "pvvtt/kg/kg.hpp"

namespace pvvtt {

struct GnnConfig {
    std::size_t D = 8;
    std::size_t L = 3;
    std::size_t E = 1024;

    void validate() const;

    friend bool operator==(const GnnConfig&, const GnnConfig&) = default;
};

// Shared input projection [E -> D] followed by one MLP per hierarchy step.
struct MissionGnnParams {
    MlpLayer input_proj;
    std::array<MlpLayer, 3> phi;

    std::size_t D() const noexcept { return input_proj.out_dim(); }
    std::size_t E() const noexcept { return input_proj.in_dim(); }

    static MissionGnnParams init(const GnnConfig& cfg, Rng& rng);

    friend bool operator==(const MissionGnnParams&, const MissionGnnParams&) = default;
};

struct EdgeMessage {
    std::size_t source = 0;
    std::size_t target = 0;
    Tensor message;  // [D]
    double norm = 0.0;
};

// Messages of one mission in KG edge order, plus every node's final feature.
struct MessageTrace {
    std::vector<EdgeMessage> edges;
    std::vector<Tensor> node_features;

    const EdgeMessage* find(std::size_t source, std::size_t target) const;
};

struct MissionOutput {
    Tensor embedding;  // [D]
    MessageTrace trace;
};

// Word -> text embedding cache shared by every KG.
class ConceptCache {
public:
    explicit ConceptCache(const Encoder* encoder) : encoder_(encoder) {}
    const Tensor& get(const std::string& word);
    std::size_t size() const noexcept { return cache_.size(); }

private:
    const Encoder* encoder_;
    std::map<std::string, Tensor> cache_;
};

// Initial features [nodes x E]: the frame for the sensor, the word embedding
// for key and association nodes, the mission name's embedding for the
// embedding node.
Tensor init_node_features(const MissionKG& kg, const Tensor& frame, ConceptCache& cache);

// Same rows with a zero sensor row; the frame is supplied separately to the
// batched forward.
Tensor concept_features(const MissionKG& kg, ConceptCache& cache);

// Batched message passing for one mission. `frames` holds one sensor
// feature per row [F x E]; the result is the embedding-node feature per row
// [F x D]. When `messages` is non-null it receives one Var per KG edge (in
// edge order), each [F x D].
Var forward_mission(Tape& tape, const MissionGnnParams& params, const MissionKG& kg,
                    const Tensor& concepts, Var frames, std::vector<Var>* messages = nullptr);

// Single frame with a full trace. `features` is [nodes x E] as produced by
// init_node_features.
MissionOutput forward_mission(const MissionGnnParams& params, const MissionKG& kg,
                              const Tensor& features);

struct FusedFrameToken {
    Tensor f;  // [M*D]
    std::size_t M = 0;
    std::size_t D = 0;

    Tensor slice(std::size_t m) const;
};

// Concatenation in mission order.
FusedFrameToken fuse(const std::vector<Tensor>& missions);

} // namespace pvvtt
