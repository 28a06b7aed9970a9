#pragma once

#include <string>
#include <vector>

#include "pvvtt/kg/kg.hpp"
#include "pvvtt/net/chat.hpp"
#include "pvvtt/net/conceptnet.hpp"

namespace pvvtt {

// Fills {V} and {mission} in the prompt template.
std::string render_concept_prompt(const KgConfig& cfg, const std::string& mission_name);

// Splits an LLM vocabulary reply into lowercased single-word candidates.
// Handles comma, semicolon and newline separated lists with optional
// numbering or bullets; multi-word entries are dropped.
std::vector<std::string> parse_vocabulary(const std::string& reply);

// Asks the chat model for cfg.V distinct single words. Missing words are
// re-requested with the already obtained ones excluded, up to
// cfg.max_retries extra queries; a shortfall after that is a GenerationError
// listing what was obtained.
std::vector<std::string> generate_key_concepts(const KgConfig& cfg, const std::string& mission_name,
                                               ChatClient& llm);

// Top `count` related terms by weight (descending, ties lexicographic).
// Unknown words yield an empty list.
std::vector<RelatedWord> fetch_related(const std::string& word, std::size_t count,
                                       RelatedTermSource& source);

// Full generation for every mission in cfg. A key concept without any
// related term is an AssemblyError.
std::vector<MissionKG> generate_kgs(const KgConfig& cfg, ChatClient& llm, RelatedTermSource& source);

} // namespace pvvtt
