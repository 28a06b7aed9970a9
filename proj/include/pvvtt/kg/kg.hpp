#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pvvtt {

enum class KgLevel : int { sensor = 0, key = 1, association = 2, embedding = 3 };

struct RelatedWord {
    std::string word;
    std::optional<double> weight;

    friend bool operator==(const RelatedWord&, const RelatedWord&) = default;
};

struct KeyConcept {
    std::string word;
    std::vector<RelatedWord> related;

    friend bool operator==(const KeyConcept&, const KeyConcept&) = default;
};

struct KgNode {
    std::size_t id = 0;
    KgLevel level = KgLevel::sensor;
    std::string word;

    friend bool operator==(const KgNode&, const KgNode&) = default;
};

struct KgEdge {
    std::size_t source = 0;
    std::size_t target = 0;

    friend bool operator==(const KgEdge&, const KgEdge&) = default;
};

// One violation class's knowledge graph: sensor -> key concepts ->
// associations -> embedding. Association words repeated under different key
// concepts are separate nodes.
struct MissionKG {
    int mission_id = 0;
    std::string mission_name;
    std::vector<KeyConcept> key_concepts;
    std::vector<KgNode> nodes;
    std::vector<KgEdge> edges;

    std::size_t sensor() const;
    std::size_t embedding() const;
    std::vector<std::size_t> nodes_at(KgLevel level) const;
    // Predecessor ids per node, in edge order.
    std::vector<std::vector<std::size_t>> predecessors() const;
    std::vector<std::vector<std::size_t>> successors() const;
    std::size_t path_count() const;

    friend bool operator==(const MissionKG&, const MissionKG&) = default;
};

inline constexpr const char* kSensorWord = "frame";

inline constexpr const char* kDefaultConceptPrompt =
    "List up {V} typical vocabularies to represent {mission} case? "
    "Note: Everything should be in a single word.";

struct KgConfig {
    std::size_t V = 10;
    std::size_t R = 1;
    std::vector<std::string> mission_names;
    std::string prompt_template = kDefaultConceptPrompt;
    std::size_t max_retries = 3;
    std::string model = "gpt-4o";

    std::size_t M() const noexcept { return mission_names.size(); }
    void validate() const;
};

// Throws ValidationError on the first violated invariant. When `expected_v`
// is given the number of key concepts must equal it.
void validate(const MissionKG& kg, std::optional<std::size_t> expected_v = std::nullopt);

// Builds the node index and edge list from key concepts and their relations.
// Throws AssemblyError for a concept without associations.
MissionKG assemble_kg(int mission_id, const std::string& mission_name,
                      std::vector<KeyConcept> concepts);

// Versioned JSON persistence. Node ids are assigned at load: sensor 0, key
// concepts in file order, associations in file order, embedding last.
std::string kg_to_json(const std::vector<MissionKG>& missions);
std::vector<MissionKG> kg_from_json(const std::string& text, const std::string& location = "<kg>");
void save_kg(const std::filesystem::path& path, const std::vector<MissionKG>& missions);
std::vector<MissionKG> load_kg(const std::filesystem::path& path);

// Stable hash of the serialised form.
std::string kg_hash(const std::vector<MissionKG>& missions);

} // namespace pvvtt
