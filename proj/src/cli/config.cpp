#include "pvvtt/cli/config.hpp"

#include <cstdlib>
#include <set>

#include "pvvtt/core/hash.hpp"
#include "pvvtt/errors.hpp"
#include "pvvtt/net/chat.hpp"
#include "pvvtt/train/checkpoint.hpp"

namespace pvvtt {
namespace {

using ojson = nlohmann::ordered_json;

template <class T>
void read(const ojson& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

void read_path(const ojson& j, const char* key, std::filesystem::path& out) {
    std::string s;
    read(j, key, s, "paths");
    if (j.contains(key)) out = s;
}

void check_keys(const ojson& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, v] : j.items()) {
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

} // namespace

CostModel CostSettings::model() const {
    CostModel m;
    m.tokens_per_image = tokens_per_image;
    m.price_per_1k = price_per_1k;
    return m;
}

RunConfig::RunConfig() {
    kg.mission_names = kDefaultMissionNames;
    propagate();
}

void RunConfig::propagate() {
    synth.seed = seed;
    synth.dim = dim;
    synth.mission_names = kg.mission_names;
    model.gnn.E = dim;
    model.encoder_seed = seed;
    train.seed = seed;
}

void RunConfig::validate() const {
    kg.validate();
    synth.validate();
    model.gnn.validate();
    model.temporal.validate();
    train.validate();
    if (reason.k == 0) throw ConfigError("reason.k must be at least 1");
    if (stride == 0) throw ConfigError("stride must be at least 1");
    if (baseline_hidden == 0) throw ConfigError("baseline_hidden must be at least 1");
}

std::filesystem::path RunConfig::manifest_path() const {
    return paths.manifest.empty() ? out("dataset/manifest.json") : paths.manifest;
}

std::filesystem::path RunConfig::kg_path() const {
    return paths.kg.empty() ? out("kg.json") : paths.kg;
}

std::filesystem::path RunConfig::checkpoint_path() const {
    return paths.checkpoint.empty() ? out("checkpoint.json") : paths.checkpoint;
}

ojson RunConfig::experiment_json() const {
    ojson j;
    j["seed"] = seed;
    j["dim"] = dim;
    j["stride"] = stride;
    j["baseline_hidden"] = baseline_hidden;
    j["kg"] = {{"V", kg.V},
               {"R", kg.R},
               {"mission_names", kg.mission_names},
               {"prompt_template", kg.prompt_template},
               {"max_retries", kg.max_retries},
               {"model", kg.model}};
    j["synth"] = {{"videos_per_class", synth.videos_per_class},
                  {"min_frames", synth.min_frames},
                  {"max_frames", synth.max_frames},
                  {"separability", synth.separability},
                  {"test_fraction", synth.test_fraction},
                  {"fps", synth.fps}};
    ojson m = to_json(model);
    m.erase("E");
    m.erase("encoder_seed");
    j["model"] = std::move(m);
    ojson t = to_json(train);
    t.erase("seed");
    j["train"] = std::move(t);
    j["reason"] = {{"k", reason.k}, {"average_frames", reason.average_frames}};
    j["cost"] = {{"tokens_per_image", cost.tokens_per_image},
                 {"price_per_1k", cost.price_per_1k},
                 {"baseline_frames", cost.baseline_frames}};
    return j;
}

std::string RunConfig::hash() const { return content_hash(experiment_json().dump()); }

void apply_json(RunConfig& cfg, const ojson& j) {
    check_keys(j, {"seed", "offline", "dim", "stride", "baseline_hidden", "paths", "kg", "synth",
                   "model", "train", "reason", "cost", "clients"},
               "config");
    read(j, "seed", cfg.seed, "config");
    read(j, "offline", cfg.offline, "config");
    read(j, "dim", cfg.dim, "config");
    read(j, "stride", cfg.stride, "config");
    read(j, "baseline_hidden", cfg.baseline_hidden, "config");
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        check_keys(p, {"output_dir", "manifest", "kg", "checkpoint", "fixtures", "cache_dir", "frames_dir"},
                   "paths");
        read_path(p, "output_dir", cfg.paths.output_dir);
        read_path(p, "manifest", cfg.paths.manifest);
        read_path(p, "kg", cfg.paths.kg);
        read_path(p, "checkpoint", cfg.paths.checkpoint);
        read_path(p, "fixtures", cfg.paths.fixtures);
        read_path(p, "cache_dir", cfg.paths.cache_dir);
        read_path(p, "frames_dir", cfg.paths.frames_dir);
    }
    if (j.contains("kg")) {
        const auto& k = j["kg"];
        check_keys(k, {"V", "R", "mission_names", "prompt_template", "max_retries", "model"}, "kg");
        read(k, "V", cfg.kg.V, "kg");
        read(k, "R", cfg.kg.R, "kg");
        read(k, "mission_names", cfg.kg.mission_names, "kg");
        read(k, "prompt_template", cfg.kg.prompt_template, "kg");
        read(k, "max_retries", cfg.kg.max_retries, "kg");
        read(k, "model", cfg.kg.model, "kg");
    }
    if (j.contains("synth")) {
        const auto& s = j["synth"];
        check_keys(s, {"videos_per_class", "min_frames", "max_frames", "separability", "test_fraction", "fps"},
                   "synth");
        read(s, "videos_per_class", cfg.synth.videos_per_class, "synth");
        read(s, "min_frames", cfg.synth.min_frames, "synth");
        read(s, "max_frames", cfg.synth.max_frames, "synth");
        read(s, "separability", cfg.synth.separability, "synth");
        read(s, "test_fraction", cfg.synth.test_fraction, "synth");
        read(s, "fps", cfg.synth.fps, "synth");
    }
    if (j.contains("model")) {
        check_keys(j["model"], {"D", "L", "window", "model_dim", "heads", "ff_mult", "positional_encoding"},
                   "model");
        ojson m = to_json(cfg.model);
        m.update(j["model"]);
        cfg.model = model_config_from_json(m);
    }
    if (j.contains("train")) {
        check_keys(j["train"], {"lr", "weight_decay", "beta1", "beta2", "epsilon", "steps", "batch", "alpha_d",
                                "lambda_smooth", "mode", "run_length"},
                   "train");
        ojson t = to_json(cfg.train);
        t.update(j["train"]);
        cfg.train = train_config_from_json(t);
    }
    if (j.contains("reason")) {
        check_keys(j["reason"], {"k", "average_frames"}, "reason");
        read(j["reason"], "k", cfg.reason.k, "reason");
        read(j["reason"], "average_frames", cfg.reason.average_frames, "reason");
    }
    if (j.contains("cost")) {
        check_keys(j["cost"], {"tokens_per_image", "price_per_1k", "baseline_frames"}, "cost");
        read(j["cost"], "tokens_per_image", cfg.cost.tokens_per_image, "cost");
        read(j["cost"], "price_per_1k", cfg.cost.price_per_1k, "cost");
        read(j["cost"], "baseline_frames", cfg.cost.baseline_frames, "cost");
    }
    if (j.contains("clients")) {
        check_keys(j["clients"], {"llm_endpoint", "llm_model", "conceptnet_url"}, "clients");
        read(j["clients"], "llm_endpoint", cfg.clients.llm_endpoint, "clients");
        read(j["clients"], "llm_model", cfg.clients.llm_model, "clients");
        read(j["clients"], "conceptnet_url", cfg.clients.conceptnet_url, "clients");
    }
    cfg.propagate();
}

RunConfig load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("missing config " + path.string(), 0, false);
    ojson j;
    try {
        j = ojson::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + " byte " + std::to_string(e.byte), e.what());
    }
    RunConfig cfg;
    apply_json(cfg, j);
    return cfg;
}

void apply_environment(RunConfig& cfg) {
    if (const char* v = std::getenv("PVVTT_CONCEPTNET_URL"); v && *v) cfg.clients.conceptnet_url = v;
    if (const char* v = std::getenv("PVVTT_CACHE_DIR"); v && *v) cfg.paths.cache_dir = v;
    if (const char* v = std::getenv("PVVTT_LLM_ENDPOINT"); v && *v) cfg.clients.llm_endpoint = v;
}

} // namespace pvvtt
