#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "pvvtt/core/random.hpp"
#include "pvvtt/core/tensor.hpp"
#include "pvvtt/embed/synth.hpp"
#include "pvvtt/gnn/mission_gnn.hpp"
#include "pvvtt/kg/kg.hpp"
#include "pvvtt/net/chat.hpp"
#include "pvvtt/net/conceptnet.hpp"

namespace pvvtt::testing {

inline std::filesystem::path fixtures_dir() { return PVVTT_FIXTURES_DIR; }
inline std::filesystem::path snapshots_dir() { return PVVTT_SNAPSHOTS_DIR; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        std::string name = "pvvtt_" + tag;
        if (info) name += std::string("_") + info->test_suite_name() + "_" + info->name();
        for (char& c : name) {
            if (c == '/') c = '_';
        }
        path_ = std::filesystem::temp_directory_path() / name;
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& x : t.storage()) x = rng.uniform(lo, hi);
    return t;
}

// Random mission KG with V key concepts, 1..R associations each.
inline MissionKG random_kg(Rng& rng, std::size_t V, std::size_t R, int mission_id = 0,
                           const std::string& name = "mission") {
    std::vector<KeyConcept> concepts;
    for (std::size_t v = 0; v < V; ++v) {
        KeyConcept kc;
        kc.word = "k" + std::to_string(mission_id) + "_" + std::to_string(v);
        const std::size_t n = 1 + rng.below(R);
        for (std::size_t r = 0; r < n; ++r) {
            kc.related.push_back({"a" + std::to_string(mission_id) + "_" + std::to_string(v) + "_" +
                                      std::to_string(r),
                                  1.0});
        }
        concepts.push_back(std::move(kc));
    }
    return assemble_kg(mission_id, name, std::move(concepts));
}

// Exactly V key concepts with exactly R associations each.
inline MissionKG regular_kg(std::size_t V, std::size_t R, int mission_id, const std::string& name) {
    std::vector<KeyConcept> concepts;
    for (std::size_t v = 0; v < V; ++v) {
        KeyConcept kc;
        kc.word = name + "_key" + std::to_string(v);
        for (std::size_t r = 0; r < R; ++r) {
            kc.related.push_back({name + "_assoc" + std::to_string(v) + "_" + std::to_string(r), 1.0});
        }
        concepts.push_back(std::move(kc));
    }
    return assemble_kg(mission_id, name, std::move(concepts));
}

inline std::vector<MissionKG> regular_kgs(const std::vector<std::string>& names, std::size_t V,
                                          std::size_t R) {
    std::vector<MissionKG> out;
    for (std::size_t m = 0; m < names.size(); ++m) {
        out.push_back(regular_kg(V, R, static_cast<int>(m), names[m]));
    }
    return out;
}

// Central differences of f around every entry of `x`.
inline Tensor finite_difference(Tensor& x, const std::function<double()>& f, double h = 1e-5) {
    Tensor out = Tensor::zeros_like(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double up = f();
        x[i] = saved - h;
        const double down = f();
        x[i] = saved;
        out[i] = (up - down) / (2.0 * h);
    }
    return out;
}

// |a - b| / max(|a|, |b|), and 0 when both are exactly zero.
inline double relative_error(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

// Chat double that records requests and replays scripted replies in order.
class ScriptedChat : public ChatClient {
public:
    explicit ScriptedChat(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string complete(const ChatRequest& request) override {
        requests.push_back(request);
        const std::size_t i = std::min(used_++, replies_.size() - 1);
        return replies_[i];
    }
    std::vector<ChatRequest> requests;

private:
    std::vector<std::string> replies_;
    std::size_t used_ = 0;
};

// ConceptNet double answering from an in-memory table of term -> body.
class TableSource : public RelatedTermSource {
public:
    std::string query(const std::string& term, std::size_t limit) override {
        queries.emplace_back(term, limit);
        auto it = bodies.find(term);
        return it == bodies.end() ? std::string(R"({"edges": []})") : it->second;
    }
    std::map<std::string, std::string> bodies;
    std::vector<std::pair<std::string, std::size_t>> queries;
};

inline std::string related_body(const std::string& term,
                                const std::vector<std::pair<std::string, double>>& related) {
    std::string body = R"({"edges": [)";
    for (std::size_t i = 0; i < related.size(); ++i) {
        if (i) body += ",";
        body += R"({"rel": {"@id": "/r/RelatedTo"}, "start": {"term": "/c/en/)" + term +
                R"("}, "end": {"term": "/c/en/)" + related[i].first + R"("}, "weight": )" +
                std::to_string(related[i].second) + "}";
    }
    return body + "]}";
}

// Trace with one message norm per edge. With `coarse` the norms come from
// {1, 2, 3} so impacts tie often.
inline MessageTrace random_trace(const MissionKG& kg, Rng& rng, bool coarse = false) {
    MessageTrace trace;
    for (const auto& e : kg.edges) {
        const double norm = coarse ? static_cast<double>(1 + rng.below(3)) : rng.uniform(0.01, 5.0);
        trace.edges.push_back({e.source, e.target, Tensor::vector({norm}), norm});
    }
    return trace;
}

inline SynthOptions small_synth(std::uint64_t seed = 3, std::size_t dim = 16) {
    SynthOptions o;
    o.seed = seed;
    o.mission_names = {"alpha", "beta"};
    o.videos_per_class = 4;
    o.min_frames = 12;
    o.max_frames = 20;
    o.dim = dim;
    return o;
}

} // namespace pvvtt::testing
