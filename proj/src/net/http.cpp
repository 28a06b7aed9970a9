#include "pvvtt/net/http.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

#include "httplib.h"

#include "pvvtt/errors.hpp"

namespace pvvtt {
namespace {

struct SplitUrl {
    std::string origin;
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("not an absolute URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

httplib::Headers to_headers(const std::map<std::string, std::string>& headers) {
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    return h;
}

HttpResponse finish(const httplib::Result& res, const std::string& url) {
    if (!res) {
        throw IoError("request to " + url + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        const bool retryable = res->status == 429 || res->status >= 500;
        throw IoError("request to " + url + " returned HTTP " + std::to_string(res->status),
                      res->status, retryable);
    }
    return {res->status, res->body};
}

std::atomic<std::size_t> g_refused{0};

} // namespace

std::size_t refused_request_count() { return g_refused.load(); }

bool offline_forced_by_environment() {
    const char* v = std::getenv("PVVTT_OFFLINE");
    return v && *v && std::string(v) != "0";
}

bool HttpTransport::offline() const { return options_.offline || offline_forced_by_environment(); }

HttpResponse HttpTransport::get(const std::string& url,
                                const std::map<std::string, std::string>& headers) const {
    if (offline()) {
        ++g_refused;
        throw NetworkDisabledError("GET " + url);
    }
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_follow_location(true);
    return finish(client.Get(parts.path, to_headers(headers)), url);
}

HttpResponse HttpTransport::post(const std::string& url, const std::string& body,
                                 const std::string& content_type,
                                 const std::map<std::string, std::string>& headers) const {
    if (offline()) {
        ++g_refused;
        throw NetworkDisabledError("POST " + url);
    }
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    return finish(client.Post(parts.path, to_headers(headers), body, content_type), url);
}

void with_retries(const RetryPolicy& policy, const std::function<void()>& fn) {
    auto delay = policy.initial_delay;
    for (int attempt = 1;; ++attempt) {
        try {
            fn();
            return;
        } catch (const IoError& e) {
            if (!e.retryable() || attempt >= policy.max_attempts) throw;
        }
        std::this_thread::sleep_for(delay);
        delay = std::chrono::milliseconds(
            static_cast<long long>(static_cast<double>(delay.count()) * policy.multiplier));
    }
}

std::string url_encode(const std::string& s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == '/') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

} // namespace pvvtt
