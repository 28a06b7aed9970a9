#include "pvvtt/net/conceptnet.hpp"

#include <cctype>
#include <map>

#include "json.hpp"

#include "pvvtt/errors.hpp"
#include "pvvtt/net/chat.hpp"

namespace pvvtt {

std::string normalize_term(const std::string& word) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : word) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += '_';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

ConceptNetClient::ConceptNetClient(Options options)
    : options_(std::move(options)), transport_(HttpTransport::Options{options_.offline}) {}

std::string ConceptNetClient::query_url(const std::string& term, std::size_t limit) const {
    std::string base = options_.base_url;
    while (!base.empty() && base.back() == '/') base.pop_back();
    return base + "/query?start=" + url_encode("/c/en/" + term) + "&rel=/r/RelatedTo&limit=" +
           std::to_string(limit);
}

std::filesystem::path ConceptNetClient::cache_path(const std::string& term) const {
    return options_.cache_dir / "conceptnet" / (term + ".json");
}

std::string ConceptNetClient::query(const std::string& term, std::size_t limit) {
    if (term.empty() || term.find('/') != std::string::npos) {
        throw ConfigError("invalid ConceptNet term '" + term + "'");
    }
    const bool cached = !options_.cache_dir.empty();
    if (cached && std::filesystem::exists(cache_path(term))) return read_text_file(cache_path(term));
    if (options_.offline || offline_forced_by_environment()) {
        throw NetworkDisabledError("no cached ConceptNet response for '" + term + "'");
    }
    HttpResponse response;
    const std::string url = query_url(term, limit);
    with_retries(options_.retry, [&] { response = transport_.get(url); });
    if (cached) write_text_file(cache_path(term), response.body);
    return response.body;
}

std::vector<RelatedWord> parse_related_edges(const std::string& body, const std::string& term) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("ConceptNet reply for '" + term + "' byte " + std::to_string(e.byte),
                         e.what());
    }
    if (!root.is_object() || !root.contains("edges") || !root["edges"].is_array()) {
        throw ParseError("ConceptNet reply for '" + term + "'", "missing edges array");
    }
    std::map<std::string, double> best;
    const std::string prefix = "/c/en/";
    for (const auto& edge : root["edges"]) {
        if (!edge.is_object()) continue;
        if (edge.contains("rel") && edge["rel"].is_object()) {
            const auto id = edge["rel"].value("@id", std::string{});
            if (!id.empty() && id != "/r/RelatedTo") continue;
        }
        // the related term is whichever endpoint is not the query term
        std::string other;
        for (const char* side : {"end", "start"}) {
            if (!edge.contains(side) || !edge[side].is_object()) continue;
            std::string uri = edge[side].value("term", edge[side].value("@id", std::string{}));
            if (uri.rfind(prefix, 0) != 0) continue;
            std::string word = uri.substr(prefix.size());
            word = word.substr(0, word.find('/'));
            if (word != term) {
                other = word;
                break;
            }
        }
        if (other.empty()) continue;
        const double weight = edge.value("weight", 1.0);
        auto [it, inserted] = best.emplace(other, weight);
        if (!inserted && weight > it->second) it->second = weight;
    }
    std::vector<RelatedWord> out;
    for (const auto& [word, weight] : best) out.push_back({word, weight});
    return out;
}

} // namespace pvvtt
