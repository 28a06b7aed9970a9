#include "pvvtt/kg/concepts.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "pvvtt/errors.hpp"

namespace pvvtt {
namespace {

void replace_all(std::string& s, const std::string& from, const std::string& to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
}

std::string trim_item(std::string s) {
    auto is_junk = [](unsigned char c) {
        return std::isspace(c) || std::ispunct(c) || std::isdigit(c);
    };
    // leading numbering and bullets, trailing punctuation
    std::size_t b = 0;
    while (b < s.size() && is_junk(static_cast<unsigned char>(s[b]))) ++b;
    std::size_t e = s.size();
    while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) ||
                     std::ispunct(static_cast<unsigned char>(s[e - 1])))) {
        --e;
    }
    return s.substr(b, e - b);
}

} // namespace

std::string render_concept_prompt(const KgConfig& cfg, const std::string& mission_name) {
    std::string prompt = cfg.prompt_template;
    replace_all(prompt, "{V}", std::to_string(cfg.V));
    replace_all(prompt, "{mission}", mission_name);
    return prompt;
}

std::vector<std::string> parse_vocabulary(const std::string& reply) {
    std::vector<std::string> out;
    std::string item;
    auto flush = [&] {
        std::string word = trim_item(item);
        item.clear();
        if (word.empty()) return;
        if (std::any_of(word.begin(), word.end(), [](unsigned char c) { return std::isspace(c); })) {
            return;
        }
        std::transform(word.begin(), word.end(), word.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.push_back(std::move(word));
    };
    for (char c : reply) {
        if (c == ',' || c == ';' || c == '\n') {
            flush();
        } else {
            item += c;
        }
    }
    flush();
    return out;
}

std::vector<std::string> generate_key_concepts(const KgConfig& cfg, const std::string& mission_name,
                                               ChatClient& llm) {
    std::vector<std::string> words;
    std::set<std::string> seen;
    const std::string base_prompt = render_concept_prompt(cfg, mission_name);
    for (std::size_t attempt = 0; attempt <= cfg.max_retries && words.size() < cfg.V; ++attempt) {
        std::string prompt = base_prompt;
        if (!words.empty()) {
            prompt += " Do not repeat any of these words: ";
            for (std::size_t i = 0; i < words.size(); ++i) prompt += (i ? ", " : "") + words[i];
            prompt += ".";
        }
        const std::string reply = llm.complete(ChatRequest::user_text(cfg.model, prompt));
        for (auto& w : parse_vocabulary(reply)) {
            if (words.size() == cfg.V) break;
            if (seen.insert(w).second) words.push_back(std::move(w));
        }
    }
    if (words.size() < cfg.V) {
        std::string got;
        for (std::size_t i = 0; i < words.size(); ++i) got += (i ? ", " : "") + words[i];
        throw GenerationError("mission '" + mission_name + "': obtained " +
                              std::to_string(words.size()) + " of " + std::to_string(cfg.V) +
                              " distinct key concepts [" + got + "]");
    }
    return words;
}

std::vector<RelatedWord> fetch_related(const std::string& word, std::size_t count,
                                       RelatedTermSource& source) {
    const std::string term = normalize_term(word);
    if (term.empty()) throw ConfigError("fetch_related: empty word");
    auto related = parse_related_edges(source.query(term, count * 4), term);
    std::sort(related.begin(), related.end(), [](const RelatedWord& a, const RelatedWord& b) {
        if (*a.weight != *b.weight) return *a.weight > *b.weight;
        return a.word < b.word;
    });
    if (related.size() > count) related.resize(count);
    return related;
}

std::vector<MissionKG> generate_kgs(const KgConfig& cfg, ChatClient& llm, RelatedTermSource& source) {
    cfg.validate();
    std::vector<MissionKG> out;
    for (std::size_t m = 0; m < cfg.M(); ++m) {
        const auto& name = cfg.mission_names[m];
        std::vector<KeyConcept> concepts;
        for (auto& word : generate_key_concepts(cfg, name, llm)) {
            KeyConcept kc{word, fetch_related(word, cfg.R, source)};
            concepts.push_back(std::move(kc));
        }
        MissionKG kg = assemble_kg(static_cast<int>(m), name, std::move(concepts));
        validate(kg, cfg.V);
        out.push_back(std::move(kg));
    }
    return out;
}

} // namespace pvvtt
