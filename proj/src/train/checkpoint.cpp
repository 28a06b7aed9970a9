#include "pvvtt/train/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "pvvtt/errors.hpp"
#include "pvvtt/net/chat.hpp"

namespace pvvtt {
namespace {

using ojson = nlohmann::ordered_json;

template <class T>
void read_field(const ojson& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

void copy_into(Tensor& dst, const Tensor& src, const std::string& name) {
    if (dst.shape() != src.shape()) {
        throw ValidationError("checkpoint: tensor " + name + " has shape " + src.shape_string() +
                              ", model expects " + dst.shape_string());
    }
    dst = src;
}

const Tensor& require(const Checkpoint& ckpt, const std::string& name) {
    const Tensor* t = ckpt.find(name);
    if (!t) throw ValidationError("checkpoint: missing tensor " + name);
    return *t;
}

} // namespace

ojson to_json(const ModelConfig& cfg) {
    ojson j;
    j["D"] = cfg.gnn.D;
    j["L"] = cfg.gnn.L;
    j["E"] = cfg.gnn.E;
    j["window"] = cfg.temporal.window;
    j["model_dim"] = cfg.temporal.model_dim;
    j["heads"] = cfg.temporal.heads;
    j["ff_mult"] = cfg.temporal.ff_mult;
    j["positional_encoding"] = cfg.temporal.positional_encoding;
    j["encoder_seed"] = cfg.encoder_seed;
    return j;
}

ojson to_json(const TrainConfig& cfg) {
    ojson j;
    j["lr"] = cfg.lr;
    j["weight_decay"] = cfg.weight_decay;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["epsilon"] = cfg.epsilon;
    j["steps"] = cfg.steps;
    j["batch"] = cfg.batch;
    j["alpha_d"] = cfg.alpha_d;
    j["lambda_smooth"] = cfg.lambda_smooth;
    j["mode"] = to_string(cfg.mode);
    j["run_length"] = cfg.run_length;
    j["seed"] = cfg.seed;
    return j;
}

ModelConfig model_config_from_json(const ojson& j) {
    if (!j.is_object()) throw ConfigError("model config must be an object");
    ModelConfig c;
    read_field(j, "D", c.gnn.D, "model");
    read_field(j, "L", c.gnn.L, "model");
    read_field(j, "E", c.gnn.E, "model");
    read_field(j, "window", c.temporal.window, "model");
    read_field(j, "model_dim", c.temporal.model_dim, "model");
    read_field(j, "heads", c.temporal.heads, "model");
    read_field(j, "ff_mult", c.temporal.ff_mult, "model");
    read_field(j, "positional_encoding", c.temporal.positional_encoding, "model");
    read_field(j, "encoder_seed", c.encoder_seed, "model");
    return c;
}

TrainConfig train_config_from_json(const ojson& j) {
    if (!j.is_object()) throw ConfigError("train config must be an object");
    TrainConfig c;
    read_field(j, "lr", c.lr, "train");
    read_field(j, "weight_decay", c.weight_decay, "train");
    read_field(j, "beta1", c.beta1, "train");
    read_field(j, "beta2", c.beta2, "train");
    read_field(j, "epsilon", c.epsilon, "train");
    read_field(j, "steps", c.steps, "train");
    read_field(j, "batch", c.batch, "train");
    read_field(j, "alpha_d", c.alpha_d, "train");
    read_field(j, "lambda_smooth", c.lambda_smooth, "train");
    std::string mode = to_string(c.mode);
    read_field(j, "mode", mode, "train");
    c.mode = supervision_mode_from_string(mode);
    read_field(j, "run_length", c.run_length, "train");
    read_field(j, "seed", c.seed, "train");
    return c;
}

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return &t;
    }
    return nullptr;
}

Checkpoint make_checkpoint(const Trainer& trainer, const std::string& kg_hash) {
    Checkpoint c;
    c.model = trainer.model().config();
    c.train = trainer.config();
    c.kg_hash = kg_hash;
    c.step = trainer.steps_done();
    c.theta = trainer.theta();
    const auto named = trainer.model().named_parameters();
    for (const auto& [name, p] : named) c.tensors.emplace_back(name, *p);
    const auto& m = trainer.optimizer().first_moments();
    const auto& v = trainer.optimizer().second_moments();
    for (std::size_t i = 0; i < m.size(); ++i) c.tensors.emplace_back("adam.m." + named[i].first, m[i]);
    for (std::size_t i = 0; i < v.size(); ++i) c.tensors.emplace_back("adam.v." + named[i].first, v[i]);
    return c;
}

std::filesystem::path checkpoint_blob_path(const std::filesystem::path& path) {
    auto p = path;
    p.replace_extension(".bin");
    return p;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const auto blob_path = checkpoint_blob_path(path);
    ojson j;
    j["version"] = kCheckpointVersion;
    j["config"] = {{"model", to_json(ckpt.model)}, {"train", to_json(ckpt.train)}};
    j["kg_hash"] = ckpt.kg_hash;
    j["step"] = ckpt.step;
    j["theta"] = ckpt.theta;
    j["blob"] = blob_path.filename().string();
    ojson index = ojson::array();
    std::string blob;
    for (const auto& [name, t] : ckpt.tensors) {
        index.push_back({{"name", name}, {"shape", t.shape()}, {"offset", blob.size()}});
        for (double v : t.data()) {
            const auto bits = std::bit_cast<std::uint64_t>(v);
            for (int i = 0; i < 8; ++i) blob.push_back(static_cast<char>(bits >> (8 * i)));
        }
    }
    j["tensors"] = std::move(index);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    {
        std::ofstream out(blob_path, std::ios::binary);
        if (!out) throw IoError("cannot write " + blob_path.string(), 0, false);
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        if (!out) throw IoError("failed writing " + blob_path.string(), 0, false);
    }
    write_text_file(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("missing checkpoint " + path.string(), 0, false);
    const std::string where = path.string();
    ojson j;
    try {
        j = ojson::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(where + " byte " + std::to_string(e.byte), e.what());
    }
    if (!j.is_object() || !j.contains("version")) throw ParseError(where, "missing field 'version'");
    if (j["version"] != kCheckpointVersion) {
        throw UnsupportedVersionError(where + ": unsupported checkpoint version " + j["version"].dump());
    }
    Checkpoint c;
    try {
        c.model = model_config_from_json(j.at("config").at("model"));
        c.train = train_config_from_json(j.at("config").at("train"));
        c.kg_hash = j.at("kg_hash").get<std::string>();
        c.step = j.at("step").get<std::size_t>();
        c.theta = j.at("theta").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where, e.what());
    }

    const auto blob_path = path.parent_path() / j.value("blob", checkpoint_blob_path(path).filename().string());
    std::ifstream in(blob_path, std::ios::binary);
    if (!in) throw IoError("cannot read " + blob_path.string(), 0, false);
    const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (!j.contains("tensors") || !j["tensors"].is_array()) throw ParseError(where + "/tensors", "expected an array");
    for (std::size_t i = 0; i < j["tensors"].size(); ++i) {
        const auto& entry = j["tensors"][i];
        const std::string loc = where + "/tensors/" + std::to_string(i);
        std::string name;
        std::vector<std::size_t> shape;
        std::size_t offset = 0;
        try {
            name = entry.at("name").get<std::string>();
            shape = entry.at("shape").get<std::vector<std::size_t>>();
            offset = entry.at("offset").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(loc, e.what());
        }
        const std::size_t count = shape_product(shape);
        if (offset + count * 8 > blob.size()) {
            throw LengthError(offset + count * 8, blob.size(), blob_path.string() + " (tensor " + name + ")");
        }
        Tensor t(shape);
        for (std::size_t k = 0; k < count; ++k) {
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) {
                bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[offset + 8 * k + b])) << (8 * b);
            }
            t[k] = std::bit_cast<double>(bits);
        }
        c.tensors.emplace_back(std::move(name), std::move(t));
    }
    return c;
}

VarModel restore_model(const Checkpoint& ckpt, const std::vector<MissionKG>& kgs, const Encoder& encoder) {
    const std::string hash = kg_hash(kgs);
    if (hash != ckpt.kg_hash) {
        throw ConsistencyError("checkpoint was trained on KG " + ckpt.kg_hash + ", got " + hash);
    }
    VarModel model(ckpt.model, kgs, encoder, 0);
    for (auto& [name, p] : model.named_parameters()) copy_into(*p, require(ckpt, name), name);
    return model;
}

void restore_trainer(Trainer& trainer, const Checkpoint& ckpt) {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    for (auto& [name, p] : trainer.model().named_parameters()) {
        copy_into(*p, require(ckpt, name), name);
        if (ckpt.step > 0) {
            m.push_back(require(ckpt, "adam.m." + name));
            v.push_back(require(ckpt, "adam.v." + name));
        }
    }
    trainer.restore(ckpt.step, ckpt.theta, std::move(m), std::move(v));
}

Checkpoint train_loop(const Dataset& data, const std::vector<MissionKG>& kgs, const ModelConfig& model,
                      const TrainConfig& train, const Encoder& encoder, std::ostream* log) {
    Trainer trainer(data, VarModel(model, kgs, encoder, train.seed), train);
    trainer.run(log);
    return make_checkpoint(trainer, kg_hash(kgs));
}

} // namespace pvvtt
