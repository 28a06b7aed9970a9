#include "pvvtt/kg/kg.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "pvvtt/errors.hpp"

namespace pvvtt {
namespace {

bool has_whitespace(const std::string& s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string node_label(const MissionKG& kg, std::size_t id) {
    return "node " + std::to_string(id) + " ('" + kg.nodes[id].word + "')";
}

} // namespace

std::size_t MissionKG::sensor() const {
    for (const auto& n : nodes) {
        if (n.level == KgLevel::sensor) return n.id;
    }
    throw ValidationError("mission '" + mission_name + "' has no sensor node");
}

std::size_t MissionKG::embedding() const {
    for (const auto& n : nodes) {
        if (n.level == KgLevel::embedding) return n.id;
    }
    throw ValidationError("mission '" + mission_name + "' has no embedding node");
}

std::vector<std::size_t> MissionKG::nodes_at(KgLevel level) const {
    std::vector<std::size_t> out;
    for (const auto& n : nodes) {
        if (n.level == level) out.push_back(n.id);
    }
    return out;
}

std::vector<std::vector<std::size_t>> MissionKG::predecessors() const {
    std::vector<std::vector<std::size_t>> pred(nodes.size());
    for (const auto& e : edges) pred[e.target].push_back(e.source);
    return pred;
}

std::vector<std::vector<std::size_t>> MissionKG::successors() const {
    std::vector<std::vector<std::size_t>> succ(nodes.size());
    for (const auto& e : edges) succ[e.source].push_back(e.target);
    return succ;
}

std::size_t MissionKG::path_count() const {
    // levels are strictly increasing along edges, so id order by level is topological
    std::vector<std::size_t> order(nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return nodes[a].level < nodes[b].level;
    });
    const auto succ = successors();
    std::vector<std::size_t> count(nodes.size(), 0);
    count[sensor()] = 1;
    for (std::size_t v : order) {
        for (std::size_t w : succ[v]) count[w] += count[v];
    }
    return count[embedding()];
}

void KgConfig::validate() const {
    if (V < 1 || R < 1 || mission_names.empty()) {
        throw ConfigError("kg config needs M >= 1, V >= 1, R >= 1");
    }
}

void validate(const MissionKG& kg, std::optional<std::size_t> expected_v) {
    const std::string who = "mission '" + kg.mission_name + "'";
    std::size_t sensors = 0;
    std::size_t embeddings = 0;
    std::size_t keys = 0;
    for (std::size_t i = 0; i < kg.nodes.size(); ++i) {
        const auto& n = kg.nodes[i];
        if (n.id != i) throw ValidationError(who + ": node ids must equal their index");
        const int lvl = static_cast<int>(n.level);
        if (lvl < 0 || lvl > 3) throw ValidationError(who + ": bad level on " + node_label(kg, i));
        sensors += n.level == KgLevel::sensor;
        embeddings += n.level == KgLevel::embedding;
        keys += n.level == KgLevel::key;
    }
    if (sensors != 1) throw ValidationError(who + ": expected exactly one sensor node");
    if (embeddings != 1) throw ValidationError(who + ": expected exactly one embedding node");
    if (keys != kg.key_concepts.size()) {
        throw ValidationError(who + ": " + std::to_string(keys) + " key nodes but " +
                              std::to_string(kg.key_concepts.size()) + " key concepts");
    }
    if (expected_v && keys != *expected_v) {
        throw ValidationError(who + ": expected V = " + std::to_string(*expected_v) +
                              " key concepts, found " + std::to_string(keys));
    }
    for (const auto& kc : kg.key_concepts) {
        if (kc.word.empty() || has_whitespace(kc.word)) {
            throw ValidationError(who + ": key concept '" + kc.word + "' is not a single word");
        }
        if (kc.related.empty()) {
            throw ValidationError(who + ": key concept '" + kc.word + "' has no associations");
        }
    }

    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::vector<std::size_t> out_assoc(kg.nodes.size(), 0);
    std::vector<std::size_t> in_degree(kg.nodes.size(), 0);
    std::vector<bool> reaches_embedding(kg.nodes.size(), false);
    for (const auto& e : kg.edges) {
        if (e.source >= kg.nodes.size() || e.target >= kg.nodes.size()) {
            throw ValidationError(who + ": edge references unknown node");
        }
        const int from = static_cast<int>(kg.nodes[e.source].level);
        const int to = static_cast<int>(kg.nodes[e.target].level);
        if (to != from + 1) {
            throw ValidationError(who + ": edge " + node_label(kg, e.source) + " -> " +
                                  node_label(kg, e.target) + " goes from level " +
                                  std::to_string(from) + " to level " + std::to_string(to));
        }
        if (!seen.emplace(e.source, e.target).second) {
            throw ValidationError(who + ": duplicate edge " + std::to_string(e.source) + " -> " +
                                  std::to_string(e.target));
        }
        ++in_degree[e.target];
        if (kg.nodes[e.target].level == KgLevel::association) ++out_assoc[e.source];
        if (kg.nodes[e.target].level == KgLevel::embedding) reaches_embedding[e.source] = true;
    }
    for (const auto& n : kg.nodes) {
        switch (n.level) {
        case KgLevel::key:
            if (in_degree[n.id] == 0) throw ValidationError(who + ": " + node_label(kg, n.id) + " has no sensor edge");
            if (out_assoc[n.id] == 0) throw ValidationError(who + ": " + node_label(kg, n.id) + " has no association edge");
            break;
        case KgLevel::association:
            if (in_degree[n.id] == 0) throw ValidationError(who + ": " + node_label(kg, n.id) + " has no key-concept edge");
            if (!reaches_embedding[n.id]) throw ValidationError(who + ": " + node_label(kg, n.id) + " has no edge to the embedding node");
            break;
        default:
            break;
        }
    }
}

MissionKG assemble_kg(int mission_id, const std::string& mission_name,
                      std::vector<KeyConcept> concepts) {
    MissionKG kg;
    kg.mission_id = mission_id;
    kg.mission_name = mission_name;
    for (const auto& kc : concepts) {
        if (kc.related.empty()) {
            throw AssemblyError("mission '" + mission_name + "': key concept '" + kc.word +
                                "' has no associations");
        }
    }
    kg.key_concepts = std::move(concepts);

    kg.nodes.push_back({0, KgLevel::sensor, kSensorWord});
    for (const auto& kc : kg.key_concepts) {
        kg.nodes.push_back({kg.nodes.size(), KgLevel::key, kc.word});
    }
    std::vector<std::size_t> assoc_ids;
    for (std::size_t k = 0; k < kg.key_concepts.size(); ++k) {
        for (const auto& rw : kg.key_concepts[k].related) {
            assoc_ids.push_back(kg.nodes.size());
            kg.nodes.push_back({kg.nodes.size(), KgLevel::association, rw.word});
        }
    }
    const std::size_t emb = kg.nodes.size();
    kg.nodes.push_back({emb, KgLevel::embedding, mission_name});

    for (std::size_t k = 0; k < kg.key_concepts.size(); ++k) kg.edges.push_back({0, 1 + k});
    std::size_t a = 0;
    for (std::size_t k = 0; k < kg.key_concepts.size(); ++k) {
        for (std::size_t r = 0; r < kg.key_concepts[k].related.size(); ++r) {
            kg.edges.push_back({1 + k, assoc_ids[a++]});
        }
    }
    for (std::size_t id : assoc_ids) kg.edges.push_back({id, emb});
    return kg;
}

} // namespace pvvtt
