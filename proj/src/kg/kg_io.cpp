#include <fstream>
#include <sstream>

#include "json.hpp"

#include "pvvtt/core/hash.hpp"
#include "pvvtt/errors.hpp"
#include "pvvtt/kg/kg.hpp"

namespace pvvtt {
namespace {

using ojson = nlohmann::ordered_json;

constexpr int kKgVersion = 1;

const ojson& require(const ojson& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw ParseError(where, std::string("missing field '") + key + "'");
    }
    return obj.at(key);
}

std::string require_string(const ojson& obj, const char* key, const std::string& where) {
    const auto& v = require(obj, key, where);
    if (!v.is_string()) throw ParseError(where + "/" + key, "expected a string");
    return v.get<std::string>();
}

MissionKG mission_from_json(const ojson& m, const std::string& where) {
    const auto& id = require(m, "mission_id", where);
    if (!id.is_number_integer()) throw ParseError(where + "/mission_id", "expected an integer");
    const std::string name = require_string(m, "mission_name", where);

    const auto& kcs = require(m, "key_concepts", where);
    if (!kcs.is_array()) throw ParseError(where + "/key_concepts", "expected an array");
    std::vector<KeyConcept> concepts;
    for (std::size_t k = 0; k < kcs.size(); ++k) {
        const std::string kw = where + "/key_concepts/" + std::to_string(k);
        KeyConcept kc;
        kc.word = require_string(kcs[k], "word", kw);
        const auto& rel = require(kcs[k], "related", kw);
        if (!rel.is_array()) throw ParseError(kw + "/related", "expected an array");
        for (std::size_t r = 0; r < rel.size(); ++r) {
            const std::string rw = kw + "/related/" + std::to_string(r);
            RelatedWord w;
            w.word = require_string(rel[r], "word", rw);
            if (rel[r].contains("weight") && !rel[r]["weight"].is_null()) {
                if (!rel[r]["weight"].is_number()) throw ParseError(rw + "/weight", "expected a number");
                w.weight = rel[r]["weight"].get<double>();
            }
            kc.related.push_back(std::move(w));
        }
        concepts.push_back(std::move(kc));
    }

    MissionKG kg;
    try {
        kg = assemble_kg(id.get<int>(), name, std::move(concepts));
    } catch (const AssemblyError& e) {
        throw ValidationError(e.what());
    }
    if (m.contains("edges")) {
        const auto& edges = m["edges"];
        if (!edges.is_array()) throw ParseError(where + "/edges", "expected an array");
        kg.edges.clear();
        for (std::size_t i = 0; i < edges.size(); ++i) {
            const auto& e = edges[i];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() ||
                !e[1].is_number_unsigned()) {
                throw ParseError(where + "/edges/" + std::to_string(i),
                                 "expected [source, target] node ids");
            }
            kg.edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
        }
    }
    return kg;
}

} // namespace

std::string kg_to_json(const std::vector<MissionKG>& missions) {
    ojson root;
    root["version"] = kKgVersion;
    ojson arr = ojson::array();
    for (const auto& kg : missions) {
        ojson m;
        m["mission_id"] = kg.mission_id;
        m["mission_name"] = kg.mission_name;
        ojson kcs = ojson::array();
        for (const auto& kc : kg.key_concepts) {
            ojson rel = ojson::array();
            for (const auto& w : kc.related) {
                ojson rw;
                rw["word"] = w.word;
                rw["weight"] = w.weight ? ojson(*w.weight) : ojson(nullptr);
                rel.push_back(std::move(rw));
            }
            kcs.push_back(ojson{{"word", kc.word}, {"related", std::move(rel)}});
        }
        m["key_concepts"] = std::move(kcs);
        ojson edges = ojson::array();
        for (const auto& e : kg.edges) edges.push_back(ojson::array({e.source, e.target}));
        m["edges"] = std::move(edges);
        arr.push_back(std::move(m));
    }
    root["missions"] = std::move(arr);
    return root.dump(2) + "\n";
}

std::vector<MissionKG> kg_from_json(const std::string& text, const std::string& location) {
    ojson root;
    try {
        root = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(location + " byte " + std::to_string(e.byte), e.what());
    }
    const auto& version = require(root, "version", location);
    if (!version.is_number_integer()) throw ParseError(location + "/version", "expected an integer");
    if (version.get<int>() != kKgVersion) {
        throw UnsupportedVersionError(location + ": unsupported KG file version " +
                                      std::to_string(version.get<int>()) + " (supported: " +
                                      std::to_string(kKgVersion) + ")");
    }
    const auto& arr = require(root, "missions", location);
    if (!arr.is_array()) throw ParseError(location + "/missions", "expected an array");
    std::vector<MissionKG> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        MissionKG kg = mission_from_json(arr[i], location + "/missions/" + std::to_string(i));
        if (kg.mission_id != static_cast<int>(i)) {
            throw ValidationError(location + ": mission at position " + std::to_string(i) +
                                  " has mission_id " + std::to_string(kg.mission_id));
        }
        validate(kg);
        out.push_back(std::move(kg));
    }
    if (out.empty()) throw ValidationError(location + ": no missions");
    return out;
}

void save_kg(const std::filesystem::path& path, const std::vector<MissionKG>& missions) {
    for (const auto& kg : missions) validate(kg);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string(), 0, false);
    out << kg_to_json(missions);
    if (!out) throw IoError("failed writing " + path.string(), 0, false);
}

std::vector<MissionKG> load_kg(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string(), 0, false);
    std::stringstream ss;
    ss << in.rdbuf();
    return kg_from_json(ss.str(), path.string());
}

std::string kg_hash(const std::vector<MissionKG>& missions) {
    return content_hash(kg_to_json(missions));
}

} // namespace pvvtt
