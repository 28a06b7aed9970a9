#include "pvvtt/net/chat.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pvvtt/core/hash.hpp"
#include "pvvtt/errors.hpp"

namespace pvvtt {

using ojson = nlohmann::ordered_json;

ChatRequest ChatRequest::user_text(std::string model, std::string text) {
    ChatRequest r;
    r.model = std::move(model);
    r.messages.push_back({"user", {{ContentPart::Kind::text, std::move(text)}}});
    return r;
}

ojson to_wire(const ChatRequest& request) {
    ojson body;
    body["model"] = request.model;
    ojson messages = ojson::array();
    for (const auto& m : request.messages) {
        ojson msg;
        msg["role"] = m.role;
        if (m.content.size() == 1 && m.content[0].kind == ContentPart::Kind::text) {
            msg["content"] = m.content[0].text;
        } else {
            ojson parts = ojson::array();
            for (const auto& p : m.content) {
                if (p.kind == ContentPart::Kind::text) {
                    parts.push_back(ojson{{"type", "text"}, {"text", p.text}});
                } else {
                    parts.push_back(ojson{{"type", "image_url"}, {"image_url", ojson{{"url", p.text}}}});
                }
            }
            msg["content"] = std::move(parts);
        }
        messages.push_back(std::move(msg));
    }
    body["messages"] = std::move(messages);
    return body;
}

std::string parse_completion(const std::string& body) {
    ojson reply;
    try {
        reply = ojson::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("completion reply byte " + std::to_string(e.byte), e.what());
    }
    if (!reply.is_object() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty()) {
        throw ParseError("completion reply", "missing choices");
    }
    const auto& choice = reply["choices"][0];
    if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object() ||
        !choice["message"].contains("content")) {
        throw ParseError("completion reply/choices/0", "missing message content");
    }
    const auto& content = choice["message"]["content"];
    if (content.is_null()) throw EmptyResponseError("completion has no content");
    if (!content.is_string()) throw ParseError("completion reply/choices/0/message/content", "expected a string");
    std::string text = content.get<std::string>();
    if (text.empty()) throw EmptyResponseError("completion text is empty");
    return text;
}

HttpChatClient::HttpChatClient(std::string endpoint, std::string api_key, HttpTransport transport,
                               RetryPolicy retry)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), transport_(transport),
      retry_(retry) {}

HttpChatClient HttpChatClient::from_environment(HttpTransport transport) {
    const char* endpoint = std::getenv("PVVTT_LLM_ENDPOINT");
    const char* key = std::getenv("PVVTT_LLM_API_KEY");
    if (!endpoint || !*endpoint) throw ConfigError("PVVTT_LLM_ENDPOINT is not set");
    if (!key || !*key) throw ConfigError("PVVTT_LLM_API_KEY is not set");
    return HttpChatClient(endpoint, key, transport);
}

std::string HttpChatClient::complete(const ChatRequest& request) {
    const std::string body = to_wire(request).dump();
    HttpResponse response;
    with_retries(retry_, [&] {
        response = transport_.post(endpoint_, body, "application/json",
                                   {{"Authorization", "Bearer " + api_key_}});
    });
    return parse_completion(response.body);
}

FixtureChatClient::FixtureChatClient(const std::filesystem::path& dir) {
    const auto path = dir / "chat.json";
    if (!std::filesystem::exists(path)) {
        throw GenerationError("offline chat fixture missing: " + path.string());
    }
    ojson root;
    try {
        root = ojson::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + " byte " + std::to_string(e.byte), e.what());
    }
    if (!root.is_array()) throw ParseError(path.string(), "expected an array of entries");
    for (std::size_t i = 0; i < root.size(); ++i) {
        const auto& e = root[i];
        const std::string where = path.string() + "/" + std::to_string(i);
        if (!e.is_object() || !e.contains("match") || !e["match"].is_string() ||
            !e.contains("responses") || !e["responses"].is_array() || e["responses"].empty()) {
            throw ParseError(where, "expected {match: string, responses: [string, ...]}");
        }
        Entry entry;
        entry.match = e["match"].get<std::string>();
        for (const auto& r : e["responses"]) {
            if (!r.is_string()) throw ParseError(where + "/responses", "expected strings");
            entry.responses.push_back(r.get<std::string>());
        }
        entries_.push_back(std::move(entry));
    }
}

std::string FixtureChatClient::complete(const ChatRequest& request) {
    std::string text;
    if (!request.messages.empty()) {
        for (const auto& p : request.messages.back().content) {
            if (p.kind == ContentPart::Kind::text) text += p.text;
        }
    }
    for (auto& e : entries_) {
        if (text.find(e.match) == std::string::npos) continue;
        const std::size_t i = std::min(e.used, e.responses.size() - 1);
        ++e.used;
        return e.responses[i];
    }
    throw GenerationError("no chat fixture matches prompt: " + text.substr(0, 80));
}

std::string StubChatClient::request_hash(const ChatRequest& request) {
    return content_hash(to_wire(request).dump());
}

std::string StubChatClient::complete(const ChatRequest& request) {
    const std::string hash = request_hash(request);
    if (!dir_.empty()) {
        const auto path = dir_ / "describe" / (hash + ".txt");
        if (std::filesystem::exists(path)) return read_text_file(path);
    }
    std::string text;
    if (!request.messages.empty()) {
        for (const auto& p : request.messages.back().content) {
            if (p.kind == ContentPart::Kind::text) text += p.text;
        }
    }
    std::string cls;
    const auto open = text.find('\'');
    if (open != std::string::npos) {
        const auto close = text.find('\'', open + 1);
        if (close != std::string::npos) cls = text.substr(open + 1, close - open - 1);
    }
    return "[stub " + hash + "] A person appears in the scene and the activity is consistent with '" +
           cls + "'.";
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string(), 0, false);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string(), 0, false);
    out << text;
    if (!out) throw IoError("failed writing " + path.string(), 0, false);
}

} // namespace pvvtt
