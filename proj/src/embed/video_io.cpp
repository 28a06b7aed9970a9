#include "pvvtt/embed/video_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

#include "pvvtt/errors.hpp"
#include "pvvtt/net/chat.hpp"

namespace pvvtt {
namespace {

using ojson = nlohmann::ordered_json;

constexpr char kMagic[4] = {'P', 'V', 'T', 'T'};
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[offset + i]) << (8 * i);
    return v;
}

ojson parse_json_file(const std::filesystem::path& path) {
    try {
        return ojson::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + " byte " + std::to_string(e.byte), e.what());
    }
}

std::vector<std::string> string_list(const ojson& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where, "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& s : j) {
        if (!s.is_string()) throw ParseError(where, "expected an array of strings");
        out.push_back(s.get<std::string>());
    }
    return out;
}

} // namespace

int FrameEmbeddingSequence::video_label() const {
    const int normal = normal_class();
    for (int l : labels) {
        if (l != normal) return l;
    }
    return normal;
}

std::vector<std::uint8_t> encode_embeddings(const Tensor& frames) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + frames.size() * 4);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u32(out, kEmbeddingFileVersion);
    put_u32(out, static_cast<std::uint32_t>(frames.rows()));
    put_u32(out, static_cast<std::uint32_t>(frames.cols()));
    for (double v : frames.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    return out;
}

Tensor decode_embeddings(const std::vector<std::uint8_t>& bytes, const std::string& location) {
    if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError(location + ": not a PVTT embedding file (bad magic)");
    }
    const std::uint32_t version = get_u32(bytes, 4);
    if (version != kEmbeddingFileVersion) {
        throw FormatError(location + ": unsupported embedding file version " + std::to_string(version));
    }
    const std::size_t frames = get_u32(bytes, 8);
    const std::size_t dim = get_u32(bytes, 12);
    const std::size_t expected = kHeaderBytes + frames * dim * 4;
    if (bytes.size() != expected) {
        throw LengthError(expected, bytes.size(),
                          location + ": header declares " + std::to_string(frames) + " frames of dim " +
                              std::to_string(dim));
    }
    Tensor t({frames, dim});
    for (std::size_t i = 0; i < frames * dim; ++i) {
        t[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i)));
    }
    return t;
}

std::filesystem::path labels_path(const std::filesystem::path& embedding_path) {
    auto p = embedding_path;
    p.replace_extension(".labels.json");
    return p;
}

void validate(const FrameEmbeddingSequence& seq) {
    if (seq.labels.size() != seq.frame_count()) {
        throw ValidationError(seq.video_id + ": " + std::to_string(seq.labels.size()) +
                              " labels for " + std::to_string(seq.frame_count()) + " frames");
    }
    if (seq.class_names.size() < 2) {
        throw ValidationError(seq.video_id + ": need at least one anomaly class plus Normal");
    }
    const int max_label = static_cast<int>(seq.class_names.size()) - 1;
    for (int l : seq.labels) {
        if (l < 0 || l > max_label) {
            throw ValidationError(seq.video_id + ": label " + std::to_string(l) + " outside [0, " +
                                  std::to_string(max_label) + "]");
        }
    }
    if (!seq.frames.all_finite()) throw ValidationError(seq.video_id + ": non-finite frame values");
}

FrameEmbeddingSequence load_video(const std::filesystem::path& path, std::size_t stride) {
    if (stride == 0) throw ConfigError("frame stride must be positive");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string(), 0, false);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    FrameEmbeddingSequence seq;
    seq.frames = decode_embeddings(bytes, path.string());

    const auto lp = labels_path(path);
    if (!std::filesystem::exists(lp)) throw IoError("missing label sidecar " + lp.string(), 0, false);
    const ojson side = parse_json_file(lp);
    const std::string where = lp.string();
    if (!side.is_object()) throw ParseError(where, "expected an object");
    if (!side.contains("video_id") || !side["video_id"].is_string()) {
        throw ParseError(where + "/video_id", "expected a string");
    }
    seq.video_id = side["video_id"].get<std::string>();
    if (!side.contains("class_names")) throw ParseError(where, "missing field 'class_names'");
    seq.class_names = string_list(side["class_names"], where + "/class_names");
    if (!side.contains("labels") || !side["labels"].is_array()) {
        throw ParseError(where + "/labels", "expected an array of integers");
    }
    for (const auto& l : side["labels"]) {
        if (!l.is_number_integer()) throw ParseError(where + "/labels", "expected integers");
        seq.labels.push_back(l.get<int>());
    }
    if (side.contains("fps") && !side["fps"].is_null()) {
        if (!side["fps"].is_number()) throw ParseError(where + "/fps", "expected a number");
        seq.fps = side["fps"].get<double>();
    }
    validate(seq);

    if (stride > 1) {
        const std::size_t kept = (seq.frame_count() + stride - 1) / stride;
        Tensor frames({kept, seq.dim()});
        std::vector<int> labels;
        for (std::size_t i = 0; i < kept; ++i) {
            auto src = seq.frames.row(i * stride);
            std::copy(src.begin(), src.end(), frames.row(i).begin());
            labels.push_back(seq.labels[i * stride]);
        }
        seq.frames = std::move(frames);
        seq.labels = std::move(labels);
        if (seq.fps) seq.fps = *seq.fps / static_cast<double>(stride);
    }
    return seq;
}

void save_video(const std::filesystem::path& path, const FrameEmbeddingSequence& seq) {
    validate(seq);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto bytes = encode_embeddings(seq.frames);
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string(), 0, false);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("failed writing " + path.string(), 0, false);
    }
    ojson side;
    side["video_id"] = seq.video_id;
    side["class_names"] = seq.class_names;
    side["labels"] = seq.labels;
    side["fps"] = seq.fps ? ojson(*seq.fps) : ojson(nullptr);
    write_text_file(labels_path(path), side.dump() + "\n");
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("missing manifest " + path.string(), 0, false);
    const ojson j = parse_json_file(path);
    const std::string where = path.string();
    DatasetManifest m;
    for (const char* key : {"train", "test", "class_names"}) {
        if (!j.is_object() || !j.contains(key)) throw ParseError(where, std::string("missing field '") + key + "'");
    }
    m.train = string_list(j["train"], where + "/train");
    m.test = string_list(j["test"], where + "/test");
    m.class_names = string_list(j["class_names"], where + "/class_names");
    return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    ojson j;
    j["train"] = manifest.train;
    j["test"] = manifest.test;
    j["class_names"] = manifest.class_names;
    write_text_file(path, j.dump(2) + "\n");
}

Dataset load_split(const std::filesystem::path& manifest_path, const std::string& split,
                   std::size_t stride) {
    const auto manifest = load_manifest(manifest_path);
    const std::vector<std::string>* files = nullptr;
    if (split == "train") {
        files = &manifest.train;
    } else if (split == "test") {
        files = &manifest.test;
    } else {
        throw ConfigError("unknown split '" + split + "' (expected train or test)");
    }
    Dataset ds;
    ds.class_names = manifest.class_names;
    const auto base = manifest_path.parent_path();
    for (const auto& f : *files) {
        auto seq = load_video(base / f, stride);
        if (seq.class_names != ds.class_names) {
            throw ValidationError(f + ": class names differ from the manifest");
        }
        if (!ds.videos.empty() && seq.dim() != ds.dim()) {
            throw ValidationError(f + ": embedding dim " + std::to_string(seq.dim()) +
                                  " differs from " + std::to_string(ds.dim()));
        }
        ds.videos.push_back(std::move(seq));
    }
    return ds;
}

} // namespace pvvtt
