#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "pvvtt/net/http.hpp"

namespace pvvtt {

struct ContentPart {
    enum class Kind { text, image_url };
    Kind kind = Kind::text;
    std::string text;  // text, or the URL for image parts
};

struct ChatMessage {
    std::string role;
    std::vector<ContentPart> content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;

    static ChatRequest user_text(std::string model, std::string text);
};

// Wire body: {model, messages: [{role, content}]}. Single text-only content
// is sent as a plain string, anything else as an array of typed parts.
nlohmann::ordered_json to_wire(const ChatRequest& request);

// First choice's message text. ParseError on malformed replies,
// EmptyResponseError when the text is empty.
std::string parse_completion(const std::string& body);

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
};

// Live client posting to a chat-completion endpoint with a bearer key.
class HttpChatClient : public ChatClient {
public:
    HttpChatClient(std::string endpoint, std::string api_key, HttpTransport transport,
                   RetryPolicy retry = {});

    // Endpoint from PVVTT_LLM_ENDPOINT, key from PVVTT_LLM_API_KEY. Throws
    // ConfigError when either is unset.
    static HttpChatClient from_environment(HttpTransport transport);

    std::string complete(const ChatRequest& request) override;

private:
    std::string endpoint_;
    std::string api_key_;
    HttpTransport transport_;
    RetryPolicy retry_;
};

// Offline replacement reading <dir>/chat.json:
//   [{"match": "<substring>", "responses": ["first reply", "second reply"]}]
// The first entry whose `match` occurs in the last message's text answers;
// its n-th use returns the n-th response (the last one repeats). No entry
// matching is a GenerationError.
class FixtureChatClient : public ChatClient {
public:
    explicit FixtureChatClient(const std::filesystem::path& dir);
    std::string complete(const ChatRequest& request) override;

private:
    struct Entry {
        std::string match;
        std::vector<std::string> responses;
        std::size_t used = 0;
    };
    std::vector<Entry> entries_;
};

// Deterministic offline responder keyed by the hash of the request body. A
// file <dir>/describe/<hash>.txt overrides the canned text when present.
class StubChatClient : public ChatClient {
public:
    explicit StubChatClient(std::filesystem::path dir = {}) : dir_(std::move(dir)) {}
    std::string complete(const ChatRequest& request) override;

    static std::string request_hash(const ChatRequest& request);

private:
    std::filesystem::path dir_;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace pvvtt
