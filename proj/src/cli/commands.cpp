#include "pvvtt/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pvvtt/cli/config.hpp"
#include "pvvtt/embed/encoder.hpp"
#include "pvvtt/embed/synth.hpp"
#include "pvvtt/embed/video_io.hpp"
#include "pvvtt/errors.hpp"
#include "pvvtt/eval/auc.hpp"
#include "pvvtt/eval/baseline.hpp"
#include "pvvtt/eval/captions.hpp"
#include "pvvtt/kg/concepts.hpp"
#include "pvvtt/net/chat.hpp"
#include "pvvtt/net/conceptnet.hpp"
#include "pvvtt/prompt/prompt.hpp"
#include "pvvtt/reason/reason.hpp"
#include "pvvtt/report/experiment.hpp"
#include "pvvtt/train/checkpoint.hpp"

namespace pvvtt {
namespace {

using ojson = nlohmann::ordered_json;
using Override = std::function<void(RunConfig&)>;

struct Context {
    std::string config_path;
    std::vector<Override> overrides;

    // Subcommand-local options that are not part of RunConfig.
    std::string video;
    std::string split = "test";
    std::string dataset_dir;
    std::string resume;
    std::string log_path;
    std::string predictions;
    std::string explanations;
    std::string prompts;
    std::string hyp;
    std::string ref;
    std::string var_report;
    std::string caption_report;
    std::string cost_report_path;
    bool baseline = false;
    bool stub = false;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

template <class T>
void option(CLI::App* app, Context& ctx, const std::string& name, const std::string& desc,
            std::function<void(RunConfig&, const T&)> set) {
    app->add_option_function<T>(
        name, [&ctx, set](const T& v) { ctx.overrides.push_back([set, v](RunConfig& c) { set(c, v); }); },
        desc);
}

void path_option(CLI::App* app, Context& ctx, const std::string& name, const std::string& desc,
                 std::filesystem::path RunPaths::*member) {
    option<std::string>(app, ctx, name, desc,
                        [member](RunConfig& c, const std::string& v) { c.paths.*member = v; });
}

void common_options(CLI::App* app, Context& ctx) {
    app->add_option("--config", ctx.config_path, "JSON run configuration; flags override its values");
    option<std::uint64_t>(app, ctx, "--seed", "Seed for data synthesis, encoder, initialisation and sampling",
                          [](RunConfig& c, const std::uint64_t& v) { c.seed = v; });
    app->add_flag_callback(
        "--offline", [&ctx] { ctx.overrides.push_back([](RunConfig& c) { c.offline = true; }); },
        "Forbid every network call (fixtures and caches only)");
    path_option(app, ctx, "--out", "Output directory (default: out)", &RunPaths::output_dir);
}

void dim_option(CLI::App* app, Context& ctx) {
    option<std::size_t>(app, ctx, "--dim", "Frame embedding dimension E (default: 1024)",
                        [](RunConfig& c, const std::size_t& v) { c.dim = v; });
}

void missions_option(CLI::App* app, Context& ctx) {
    option<std::string>(app, ctx, "--missions", "Comma separated anomaly class names",
                        [](RunConfig& c, const std::string& v) { c.kg.mission_names = split_list(v); });
}

void model_inputs(CLI::App* app, Context& ctx) {
    path_option(app, ctx, "--manifest", "Dataset manifest (default: <out>/dataset/manifest.json)",
                &RunPaths::manifest);
    path_option(app, ctx, "--kg", "Knowledge graph file (default: <out>/kg.json)", &RunPaths::kg);
    option<std::size_t>(app, ctx, "--stride", "Keep every n-th frame when loading videos (default: 1)",
                        [](RunConfig& c, const std::size_t& v) { c.stride = v; });
}

ojson read_json(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("missing file " + path.string(), 0, false);
    try {
        return ojson::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + " byte " + std::to_string(e.byte), e.what());
    }
}

void write_json(const std::filesystem::path& path, const ojson& j) { write_text_file(path, j.dump(2) + "\n"); }

std::vector<MissionKG> load_kgs(const RunConfig& cfg) {
    auto kgs = load_kg(cfg.kg_path());
    for (std::size_t m = 0; m < kgs.size(); ++m) {
        if (kgs[m].mission_id != static_cast<int>(m)) {
            throw ValidationError(cfg.kg_path().string() + ": mission at position " + std::to_string(m) +
                                  " has mission_id " + std::to_string(kgs[m].mission_id));
        }
    }
    return kgs;
}

void check_classes(const std::vector<MissionKG>& kgs, const std::vector<std::string>& class_names,
                   const std::string& where) {
    if (class_names.size() != kgs.size() + 1) {
        throw ValidationError(where + ": " + std::to_string(class_names.size()) + " classes for " +
                              std::to_string(kgs.size()) + " missions plus Normal");
    }
    for (std::size_t m = 0; m < kgs.size(); ++m) {
        if (class_names[m] != kgs[m].mission_name) {
            throw ValidationError(where + ": class " + std::to_string(m) + " is '" + class_names[m] +
                                  "' but mission " + std::to_string(m) + " is '" + kgs[m].mission_name + "'");
        }
    }
}

Dataset load_dataset(const RunConfig& cfg, const std::string& split) {
    Dataset ds = load_split(cfg.manifest_path(), split, cfg.stride);
    if (ds.videos.empty()) throw ValidationError("split '" + split + "' of " + cfg.manifest_path().string() + " is empty");
    return ds;
}

VarModel load_model(const RunConfig& cfg, const std::vector<MissionKG>& kgs) {
    const Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path());
    PseudoEncoder encoder(ckpt.model.encoder_seed, ckpt.model.gnn.E);
    return restore_model(ckpt, kgs, encoder);
}

std::unique_ptr<ChatClient> concept_client(const RunConfig& cfg) {
    if (cfg.offline || !cfg.paths.fixtures.empty()) return std::make_unique<FixtureChatClient>(cfg.paths.fixtures);
    HttpTransport transport;
    if (!cfg.clients.llm_endpoint.empty()) {
        const char* key = std::getenv("PVVTT_LLM_API_KEY");
        if (!key || !*key) throw ConfigError("PVVTT_LLM_API_KEY is not set");
        return std::make_unique<HttpChatClient>(cfg.clients.llm_endpoint, key, transport);
    }
    return std::make_unique<HttpChatClient>(HttpChatClient::from_environment(transport));
}

// ---- kg-gen -------------------------------------------------------------

int cmd_kg_gen(const RunConfig& cfg, std::ostream& out) {
    auto llm = concept_client(cfg);
    ConceptNetClient::Options opts;
    opts.base_url = cfg.clients.conceptnet_url;
    opts.cache_dir = cfg.paths.fixtures.empty() ? cfg.paths.cache_dir : cfg.paths.fixtures;
    opts.offline = cfg.offline;
    ConceptNetClient conceptnet(opts);
    const auto kgs = generate_kgs(cfg.kg, *llm, conceptnet);
    save_kg(cfg.kg_path(), kgs);
    out << "wrote " << cfg.kg_path().string() << " (" << kgs.size() << " missions, hash " << kg_hash(kgs) << ")\n";
    return 0;
}

// ---- dataset-synth ------------------------------------------------------

int cmd_dataset_synth(const RunConfig& cfg, const Context& ctx, std::ostream& out) {
    const std::filesystem::path dir = ctx.dataset_dir.empty() ? cfg.manifest_path().parent_path()
                                                              : std::filesystem::path(ctx.dataset_dir);
    const SynthDataset ds = synth_dataset(cfg.synth);
    const auto manifest = write_dataset(dir, ds);
    out << "wrote " << manifest.string() << " (" << ds.train.size() << " train, " << ds.test.size()
        << " test videos)\n";
    return 0;
}

// ---- train --------------------------------------------------------------

int cmd_train(const RunConfig& cfg, const Context& ctx, std::ostream& out) {
    const auto kgs = load_kgs(cfg);
    const Dataset data = load_dataset(cfg, "train");
    check_classes(kgs, data.class_names, cfg.manifest_path().string());
    if (data.dim() != cfg.dim) {
        throw ValidationError("dataset dim " + std::to_string(data.dim()) + " differs from configured dim " +
                              std::to_string(cfg.dim) + " (set --dim)");
    }
    PseudoEncoder encoder(cfg.model.encoder_seed, cfg.dim);
    Trainer trainer(data, VarModel(cfg.model, kgs, encoder, cfg.train.seed), cfg.train);
    if (!ctx.resume.empty()) {
        const Checkpoint ckpt = load_checkpoint(ctx.resume);
        if (ckpt.kg_hash != kg_hash(kgs)) throw ConsistencyError("--resume checkpoint was trained on a different KG");
        if (!(ckpt.model == cfg.model)) throw ConsistencyError("--resume checkpoint has a different model config");
        restore_trainer(trainer, ckpt);
    }
    const std::filesystem::path log_path = ctx.log_path.empty() ? cfg.out("train_log.jsonl") : std::filesystem::path(ctx.log_path);
    if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
    std::ofstream log(log_path, ctx.resume.empty() ? std::ios::trunc : std::ios::app);
    if (!log) throw IoError("cannot write " + log_path.string(), 0, false);
    trainer.run(&log);
    save_checkpoint(cfg.checkpoint_path(), make_checkpoint(trainer, kg_hash(kgs)));
    out << "trained " << trainer.steps_done() << " steps; wrote " << cfg.checkpoint_path().string() << "\n";
    return 0;
}

// ---- infer / eval-var ---------------------------------------------------

struct Predictions {
    std::vector<std::string> class_names;
    std::vector<std::string> video_ids;
    std::vector<std::vector<int>> labels;
    std::vector<Tensor> probs;
};

Predictions predict_split(const RunConfig& cfg, const std::string& split) {
    const auto kgs = load_kgs(cfg);
    const Dataset data = load_dataset(cfg, split);
    check_classes(kgs, data.class_names, cfg.manifest_path().string());
    const VarModel model = load_model(cfg, kgs);
    Predictions p;
    p.class_names = data.class_names;
    for (const auto& v : data.videos) {
        p.video_ids.push_back(v.video_id);
        p.labels.push_back(v.labels);
        p.probs.push_back(model.predict_video(v.frames));
    }
    return p;
}

ojson to_json(const Predictions& p, const std::string& config_hash) {
    ojson j;
    j["config_hash"] = config_hash;
    j["class_names"] = p.class_names;
    j["videos"] = ojson::array();
    for (std::size_t i = 0; i < p.video_ids.size(); ++i) {
        ojson rows = ojson::array();
        for (std::size_t t = 0; t < p.probs[i].rows(); ++t) {
            rows.push_back(std::vector<double>(p.probs[i].row(t).begin(), p.probs[i].row(t).end()));
        }
        j["videos"].push_back({{"video_id", p.video_ids[i]}, {"labels", p.labels[i]}, {"probs", std::move(rows)}});
    }
    return j;
}

Predictions predictions_from_json(const ojson& j, const std::string& where) {
    Predictions p;
    try {
        p.class_names = j.at("class_names").get<std::vector<std::string>>();
        for (const auto& v : j.at("videos")) {
            p.video_ids.push_back(v.at("video_id").get<std::string>());
            p.labels.push_back(v.at("labels").get<std::vector<int>>());
            const auto rows = v.at("probs").get<std::vector<std::vector<double>>>();
            Tensor t({rows.size(), p.class_names.size()});
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (rows[r].size() != p.class_names.size()) throw ParseError(where, "probability row of wrong length");
                std::copy(rows[r].begin(), rows[r].end(), t.row(r).begin());
            }
            if (rows.size() != p.labels.back().size()) throw ParseError(where, "label and probability counts differ");
            p.probs.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where, e.what());
    }
    return p;
}

AucReport report_from(const Predictions& p) {
    std::size_t total = 0;
    for (const auto& t : p.probs) total += t.rows();
    Tensor all({total, p.class_names.size()});
    std::vector<int> labels;
    std::size_t row = 0;
    for (std::size_t i = 0; i < p.probs.size(); ++i) {
        std::copy(p.probs[i].storage().begin(), p.probs[i].storage().end(),
                  all.storage().begin() + row * p.class_names.size());
        row += p.probs[i].rows();
        labels.insert(labels.end(), p.labels[i].begin(), p.labels[i].end());
    }
    return var_report(all, labels, p.class_names);
}

int cmd_infer(const RunConfig& cfg, const Context& ctx, std::ostream& out) {
    const Predictions p = predict_split(cfg, ctx.split);
    const auto path = cfg.out("predictions.json");
    write_json(path, to_json(p, cfg.hash()));
    out << "wrote " << path.string() << " (" << p.video_ids.size() << " videos)\n";
    return 0;
}

void write_auc_report(const RunConfig& cfg, const std::string& stem, AucReport report, std::ostream& out) {
    report.config_hash = cfg.hash();
    write_json(cfg.out(stem + ".json"), to_json(report));
    write_text_file(cfg.out(stem + ".csv"), to_csv(report));
    for (const auto& w : report.warnings) out << "warning: " << w << "\n";
    out << "wrote " << cfg.out(stem + ".json").string();
    if (report.mauc) out << " (mAUC " << *report.mauc << ")";
    out << "\n";
}

int cmd_eval_var(const RunConfig& cfg, const Context& ctx, std::ostream& out) {
    if (ctx.baseline) {
        const Dataset train = load_dataset(cfg, "train");
        const Dataset test = load_dataset(cfg, ctx.split);
        const BaselineMlp mlp = train_baseline(train, cfg.train, cfg.baseline_hidden);
        Predictions p;
        p.class_names = test.class_names;
        for (const auto& v : test.videos) {
            p.video_ids.push_back(v.video_id);
            p.labels.push_back(v.labels);
            p.probs.push_back(mlp.predict(v.frames));
        }
        write_auc_report(cfg, "baseline_report", report_from(p), out);
        return 0;
    }
    const Predictions p = ctx.predictions.empty() ? predict_split(cfg, ctx.split)
                                                  : predictions_from_json(read_json(ctx.predictions), ctx.predictions);
    write_auc_report(cfg, "var_report", report_from(p), out);
    return 0;
}

// ---- explain ------------------------------------------------------------

Explanation explain_video(const RunConfig& cfg, const VarModel& model, const FrameEmbeddingSequence& video) {
    const Tensor probs = model.predict_video(video.frames);
    const std::size_t M = model.missions();
    std::size_t top_mission = 0;
    double top_score = -1.0;
    bool any_anomaly = false;
    for (std::size_t t = 0; t < probs.rows(); ++t) {
        auto row = probs.row(t);
        const auto arg = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        any_anomaly = any_anomaly || arg < M;
        for (std::size_t m = 0; m < M; ++m) {
            if (row[m] > top_score) {
                top_score = row[m];
                top_mission = m;
            }
        }
    }
    const std::size_t predicted = any_anomaly ? top_mission : M;
    const std::size_t key = select_key_frame(probs, predicted);

    std::vector<MessageTrace> traces;
    if (cfg.reason.average_frames) {
        for (std::size_t t = 0; t < probs.rows(); ++t) {
            auto row = probs.row(t);
            if (static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()) == predicted) {
                traces.push_back(model.trace(top_mission, video.frames.row_tensor(t)).trace);
            }
        }
    }
    if (traces.empty()) traces.push_back(model.trace(top_mission, video.frames.row_tensor(key)).trace);
    const WeightedDag dag = build_weighted_dag(model.kgs()[top_mission], traces);

    Explanation e;
    e.video_id = video.video_id;
    e.predicted_class = video.class_names[predicted];
    e.frame_index = key;
    e.paths = top_k_paths(dag, cfg.reason.k);
    return e;
}

int cmd_explain(const RunConfig& cfg, const Context& ctx, std::ostream& out) {
    const auto kgs = load_kgs(cfg);
    const Dataset data = load_dataset(cfg, ctx.split);
    check_classes(kgs, data.class_names, cfg.manifest_path().string());
    const VarModel model = load_model(cfg, kgs);
    ojson all = ojson::array();
    std::size_t done = 0;
    for (const auto& v : data.videos) {
        if (!ctx.video.empty() && v.video_id != ctx.video) continue;
        const Explanation e = explain_video(cfg, model, v);
        out << e.video_id << ": " << e.predicted_class << " (frame " << e.frame_index << ")\n";
        for (const auto& line : render_paths(e.paths)) out << "  " << line << "\n";
        all.push_back(to_json(e));
        ++done;
    }
    if (done == 0) throw ValidationError("no video '" + ctx.video + "' in split '" + ctx.split + "'");
    const auto path = cfg.out("explanations.json");
    write_json(path, all);
    out << "wrote " << path.string() << "\n";
    return 0;
}

std::vector<Explanation> explanations_from_json(const ojson& j, const std::string& where) {
    std::vector<Explanation> out;
    try {
        for (const auto& item : j) {
            Explanation e;
            e.video_id = item.at("video_id").get<std::string>();
            e.predicted_class = item.at("predicted_class").get<std::string>();
            e.frame_index = item.at("frame_index").get<std::size_t>();
            for (const auto& p : item.at("paths")) {
                ReasoningPath path;
                path.words = p.at("nodes").get<std::vector<std::string>>();
                path.impact = p.at("impact").get<double>();
                if (path.words.size() != 4) throw ParseError(where, "a path must list 4 nodes");
                e.paths.push_back(std::move(path));
            }
            out.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(where, ex.what());
    }
    return out;
}

// ---- describe / cost-report ---------------------------------------------

ojson bundle_json(const std::string& video_id, const PromptBundle& b) {
    ojson j;
    j["video_id"] = video_id;
    j["class_name"] = b.class_name;
    j["path_lines"] = b.path_lines;
    j["frame_index"] = b.frame.index;
    j["image"] = b.frame.uri;
    j["text"] = b.text;
    j["text_tokens"] = b.tokens.text_tokens;
    j["image_tokens"] = b.tokens.image_tokens;
    j["total_tokens"] = b.tokens.total();
    return j;
}

int cmd_describe(const RunConfig& cfg, const Context& ctx, std::ostream& out) {
    const std::filesystem::path src = ctx.explanations.empty() ? cfg.out("explanations.json")
                                                               : std::filesystem::path(ctx.explanations);
    const auto explanations = explanations_from_json(read_json(src), src.string());
    std::unique_ptr<ChatClient> client;
    if (cfg.offline || ctx.stub) {
        client = std::make_unique<StubChatClient>(cfg.paths.fixtures);
    } else {
        client = concept_client(cfg);
    }
    const CostModel cost = cfg.cost.model();
    ojson descriptions = ojson::object();
    ojson prompts = ojson::array();
    for (const auto& e : explanations) {
        const auto frame = make_frame_ref(cfg.paths.frames_dir, e.video_id, e.frame_index);
        const PromptBundle bundle = build_prompt(e.predicted_class, render_paths(e.paths), frame, cost);
        descriptions[e.video_id] = describe(bundle, *client, cfg.clients.llm_model);
        prompts.push_back(bundle_json(e.video_id, bundle));
    }
    write_json(cfg.out("descriptions.json"), descriptions);
    write_json(cfg.out("prompts.json"), prompts);
    out << "wrote " << cfg.out("descriptions.json").string() << " and " << cfg.out("prompts.json").string() << "\n";
    return 0;
}

int cmd_cost_report(const RunConfig& cfg, const Context& ctx, std::ostream& out) {
    const std::filesystem::path src = ctx.prompts.empty() ? cfg.out("prompts.json") : std::filesystem::path(ctx.prompts);
    const ojson j = read_json(src);
    const CostModel cost = cfg.cost.model();
    std::vector<PromptBundle> bundles;
    std::vector<std::string> ids;
    try {
        for (const auto& item : j) {
            FrameRef frame{item.at("frame_index").get<std::size_t>(), item.at("image").get<std::string>()};
            bundles.push_back(build_prompt(item.at("class_name").get<std::string>(),
                                           item.at("path_lines").get<std::vector<std::string>>(), frame, cost));
            ids.push_back(item.at("video_id").get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(src.string(), e.what());
    }
    CostReport report = cost_report(bundles, ids, cfg.cost.baseline_frames, cost);
    report.config_hash = cfg.hash();
    write_text_file(cfg.out("cost_report.csv"), to_csv(report));
    write_json(cfg.out("cost_report.json"), to_json(report));
    out << "mean tokens: ours " << report.mean_ours << ", baseline " << report.mean_baseline << ", ratio "
        << report.mean_ratio << "\n";
    return 0;
}

// ---- eval-captions / report ---------------------------------------------

std::map<std::string, std::string> caption_map(const std::filesystem::path& path) {
    const ojson j = read_json(path);
    if (!j.is_object()) throw ParseError(path.string(), "expected an object of video_id: text");
    std::map<std::string, std::string> out;
    for (const auto& [id, text] : j.items()) {
        if (!text.is_string()) throw ParseError(path.string() + "/" + id, "expected a string");
        out[id] = text.get<std::string>();
    }
    return out;
}

int cmd_eval_captions(const RunConfig& cfg, const Context& ctx, std::ostream& out) {
    const std::filesystem::path hyp = ctx.hyp.empty() ? cfg.out("descriptions.json") : std::filesystem::path(ctx.hyp);
    CaptionScore score = score_captions(caption_map(hyp), caption_map(ctx.ref));
    score.config_hash = cfg.hash();
    write_json(cfg.out("caption_report.json"), to_json(score));
    out << "BLEU-4 " << score.bleu4 << ", ROUGE-L " << score.rougeL << " over " << score.pairs << " captions\n";
    return 0;
}

int cmd_report(const RunConfig& cfg, const Context& ctx, std::ostream& out) {
    auto pick = [&](const std::string& flag, const char* file) -> std::optional<ojson> {
        const std::filesystem::path p = flag.empty() ? cfg.out(file) : std::filesystem::path(flag);
        if (flag.empty() && !std::filesystem::exists(p)) return std::nullopt;
        return read_json(p);
    };
    std::optional<AucReport> var;
    std::optional<CaptionScore> captions;
    std::optional<CostReport> cost;
    if (auto j = pick(ctx.var_report, "var_report.json")) var = auc_report_from_json(*j);
    if (auto j = pick(ctx.caption_report, "caption_report.json")) captions = caption_score_from_json(*j);
    if (auto j = pick(ctx.cost_report_path, "cost_report.json")) cost = cost_summary_from_json(*j);
    const ExperimentRecord record = merge_reports(var, captions, cost);
    write_experiment(cfg.paths.output_dir, record);
    out << "wrote " << cfg.out("experiment.json").string() << " and " << cfg.out("experiment.csv").string() << "\n";
    return 0;
}

// ---- wiring -------------------------------------------------------------

RunConfig resolve(const Context& ctx) {
    RunConfig cfg;
    apply_environment(cfg);
    if (!ctx.config_path.empty()) apply_json(cfg, read_json(ctx.config_path));
    for (const auto& o : ctx.overrides) o(cfg);
    cfg.propagate();
    cfg.validate();
    return cfg;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app("Knowledge-graph grounded video anomaly recognition and explanation", "pvvtt");
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");
    Context ctx;

    auto* kg_gen = app.add_subcommand("kg-gen", "Generate mission knowledge graphs (LLM key concepts + ConceptNet)");
    common_options(kg_gen, ctx);
    path_option(kg_gen, ctx, "--kg", "Output knowledge graph file (default: <out>/kg.json)", &RunPaths::kg);
    path_option(kg_gen, ctx, "--fixtures", "Offline fixture directory (chat.json, conceptnet/<term>.json)",
                &RunPaths::fixtures);
    path_option(kg_gen, ctx, "--cache-dir", "ConceptNet response cache directory", &RunPaths::cache_dir);
    option<std::size_t>(kg_gen, ctx, "--V", "Key concepts per mission (default: 10)",
                        [](RunConfig& c, const std::size_t& v) { c.kg.V = v; });
    option<std::size_t>(kg_gen, ctx, "--R", "Related words per key concept (default: 1)",
                        [](RunConfig& c, const std::size_t& v) { c.kg.R = v; });
    missions_option(kg_gen, ctx);
    option<std::string>(kg_gen, ctx, "--llm-model", "Chat model name (default: gpt-4o)",
                        [](RunConfig& c, const std::string& v) { c.kg.model = v; });

    auto* synth = app.add_subcommand("dataset-synth", "Write a synthetic frame-embedding dataset");
    common_options(synth, ctx);
    synth->add_option("--dataset-dir", ctx.dataset_dir, "Dataset directory (default: <out>/dataset)");
    dim_option(synth, ctx);
    missions_option(synth, ctx);
    option<std::size_t>(synth, ctx, "--videos-per-class", "Videos per class, Normal included (default: 20)",
                        [](RunConfig& c, const std::size_t& v) { c.synth.videos_per_class = v; });
    option<std::size_t>(synth, ctx, "--min-frames", "Minimum frames per video (default: 100)",
                        [](RunConfig& c, const std::size_t& v) { c.synth.min_frames = v; });
    option<std::size_t>(synth, ctx, "--max-frames", "Maximum frames per video (default: 300)",
                        [](RunConfig& c, const std::size_t& v) { c.synth.max_frames = v; });
    option<double>(synth, ctx, "--separability", "Class separability in [0, 1] (default: 0.9)",
                   [](RunConfig& c, const double& v) { c.synth.separability = v; });
    option<double>(synth, ctx, "--test-fraction", "Share of each class held out for test (default: 0.2)",
                   [](RunConfig& c, const double& v) { c.synth.test_fraction = v; });

    auto* train = app.add_subcommand("train", "Train the mission GNN and temporal classifier");
    common_options(train, ctx);
    model_inputs(train, ctx);
    dim_option(train, ctx);
    path_option(train, ctx, "--checkpoint", "Output checkpoint manifest (default: <out>/checkpoint.json)",
                &RunPaths::checkpoint);
    train->add_option("--resume", ctx.resume, "Continue from this checkpoint");
    train->add_option("--log", ctx.log_path, "Step log, JSON lines (default: <out>/train_log.jsonl)");
    option<std::size_t>(train, ctx, "--steps", "Optimizer steps (default: 3000)",
                        [](RunConfig& c, const std::size_t& v) { c.train.steps = v; });
    option<std::size_t>(train, ctx, "--batch", "Samples per mini-batch (default: 128)",
                        [](RunConfig& c, const std::size_t& v) { c.train.batch = v; });
    option<double>(train, ctx, "--lr", "Learning rate (default: 1e-5)",
                   [](RunConfig& c, const double& v) { c.train.lr = v; });
    option<double>(train, ctx, "--weight-decay", "Decoupled weight decay (default: 1.0)",
                   [](RunConfig& c, const double& v) { c.train.weight_decay = v; });
    option<double>(train, ctx, "--alpha-d", "Threshold decay per step (default: 0.9999)",
                   [](RunConfig& c, const double& v) { c.train.alpha_d = v; });
    option<double>(train, ctx, "--lambda-smooth", "Smoothing loss weight (default: 0.1)",
                   [](RunConfig& c, const double& v) { c.train.lambda_smooth = v; });
    option<std::string>(train, ctx, "--mode", "Supervision: frame or video (default: frame)",
                        [](RunConfig& c, const std::string& v) { c.train.mode = supervision_mode_from_string(v); });
    option<std::size_t>(train, ctx, "--window", "Temporal window length A (default: 16)",
                        [](RunConfig& c, const std::size_t& v) { c.model.temporal.window = v; });

    auto* infer = app.add_subcommand("infer", "Write per-frame class probabilities for a split");
    common_options(infer, ctx);
    model_inputs(infer, ctx);
    path_option(infer, ctx, "--checkpoint", "Checkpoint manifest (default: <out>/checkpoint.json)",
                &RunPaths::checkpoint);
    infer->add_option("--split", ctx.split, "train or test (default: test)");

    auto* explain = app.add_subcommand("explain", "Extract the top-k reasoning paths per video");
    common_options(explain, ctx);
    model_inputs(explain, ctx);
    path_option(explain, ctx, "--checkpoint", "Checkpoint manifest (default: <out>/checkpoint.json)",
                &RunPaths::checkpoint);
    explain->add_option("--split", ctx.split, "train or test (default: test)");
    explain->add_option("--video", ctx.video, "Only this video id");
    option<std::size_t>(explain, ctx, "--k", "Paths per video (default: 3)",
                        [](RunConfig& c, const std::size_t& v) { c.reason.k = v; });
    explain->add_flag_callback(
        "--average-frames",
        [&ctx] { ctx.overrides.push_back([](RunConfig& c) { c.reason.average_frames = true; }); },
        "Average message norms over all frames predicted as the explained class");

    auto* describe_cmd = app.add_subcommand("describe", "Build prompts from explanations and request descriptions");
    common_options(describe_cmd, ctx);
    describe_cmd->add_option("--explanations", ctx.explanations, "Explanations file (default: <out>/explanations.json)");
    path_option(describe_cmd, ctx, "--frames-dir", "Frame images as <dir>/<video_id>/<index>.jpg",
                &RunPaths::frames_dir);
    path_option(describe_cmd, ctx, "--fixtures", "Directory with describe/<hash>.txt canned replies",
                &RunPaths::fixtures);
    describe_cmd->add_flag("--stub", ctx.stub, "Use the deterministic offline responder");
    option<std::string>(describe_cmd, ctx, "--llm-model", "Chat model name (default: gpt-4o)",
                        [](RunConfig& c, const std::string& v) { c.clients.llm_model = v; });
    option<std::size_t>(describe_cmd, ctx, "--tokens-per-image", "Image token cost (default: 765)",
                        [](RunConfig& c, const std::size_t& v) { c.cost.tokens_per_image = v; });

    auto* eval_var = app.add_subcommand("eval-var", "Frame-level one-vs-rest AUC and mAUC");
    common_options(eval_var, ctx);
    model_inputs(eval_var, ctx);
    path_option(eval_var, ctx, "--checkpoint", "Checkpoint manifest (default: <out>/checkpoint.json)",
                &RunPaths::checkpoint);
    eval_var->add_option("--predictions", ctx.predictions, "Use an infer output instead of running the model");
    eval_var->add_option("--split", ctx.split, "train or test (default: test)");
    eval_var->add_flag("--baseline", ctx.baseline, "Train and evaluate the embedding MLP baseline instead");
    option<std::size_t>(eval_var, ctx, "--steps", "Baseline optimizer steps (default: 3000)",
                        [](RunConfig& c, const std::size_t& v) { c.train.steps = v; });

    auto* eval_captions = app.add_subcommand("eval-captions", "BLEU-4 and ROUGE-L against reference captions");
    common_options(eval_captions, ctx);
    eval_captions->add_option("--hyp", ctx.hyp, "Generated captions {video_id: text} (default: <out>/descriptions.json)");
    eval_captions->add_option("--ref", ctx.ref, "Reference captions {video_id: text}")->required();

    auto* cost = app.add_subcommand("cost-report", "Token cost of our prompts against a whole-video baseline");
    common_options(cost, ctx);
    cost->add_option("--prompts", ctx.prompts, "Prompts file from describe (default: <out>/prompts.json)");
    option<std::size_t>(cost, ctx, "--baseline-frames", "Frames sent by the whole-video baseline (default: 12)",
                        [](RunConfig& c, const std::size_t& v) { c.cost.baseline_frames = v; });
    option<std::size_t>(cost, ctx, "--tokens-per-image", "Image token cost (default: 765)",
                        [](RunConfig& c, const std::size_t& v) { c.cost.tokens_per_image = v; });
    option<double>(cost, ctx, "--price-per-1k", "Price per 1000 tokens (default: 0.005)",
                   [](RunConfig& c, const double& v) { c.cost.price_per_1k = v; });

    auto* report = app.add_subcommand("report", "Merge VAR, caption and cost reports into one record");
    common_options(report, ctx);
    report->add_option("--var", ctx.var_report, "VAR report (default: <out>/var_report.json if present)");
    report->add_option("--captions", ctx.caption_report, "Caption report (default: <out>/caption_report.json if present)");
    report->add_option("--cost", ctx.cost_report_path, "Cost report (default: <out>/cost_report.json if present)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return 1;
    }

    try {
        const RunConfig cfg = resolve(ctx);
        if (kg_gen->parsed()) return cmd_kg_gen(cfg, out);
        if (synth->parsed()) return cmd_dataset_synth(cfg, ctx, out);
        if (train->parsed()) return cmd_train(cfg, ctx, out);
        if (infer->parsed()) return cmd_infer(cfg, ctx, out);
        if (explain->parsed()) return cmd_explain(cfg, ctx, out);
        if (describe_cmd->parsed()) return cmd_describe(cfg, ctx, out);
        if (eval_var->parsed()) return cmd_eval_var(cfg, ctx, out);
        if (eval_captions->parsed()) return cmd_eval_captions(cfg, ctx, out);
        if (cost->parsed()) return cmd_cost_report(cfg, ctx, out);
        if (report->parsed()) return cmd_report(cfg, ctx, out);
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace pvvtt
