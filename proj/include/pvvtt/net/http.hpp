#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <string>

namespace pvvtt {

struct HttpResponse {
    int status = 0;
    std::string body;
};

// Thin HTTP(S) client. Every request first checks the offline switch: an
// instance built with offline = true, or any process with PVVTT_OFFLINE set
// to a non-empty value other than "0", raises NetworkDisabledError instead of
// touching the network.
class HttpTransport {
public:
    struct Options {
        bool offline = false;
        std::chrono::seconds timeout{60};
    };

    HttpTransport() = default;
    explicit HttpTransport(Options options) : options_(options) {}

    HttpResponse get(const std::string& url,
                     const std::map<std::string, std::string>& headers = {}) const;
    HttpResponse post(const std::string& url, const std::string& body,
                      const std::string& content_type,
                      const std::map<std::string, std::string>& headers = {}) const;

    bool offline() const;

private:
    Options options_;
};

bool offline_forced_by_environment();

// Requests refused by the offline switch so far in this process.
std::size_t refused_request_count();

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_delay{500};
    double multiplier = 2.0;
};

// Runs `fn`, retrying retryable IoErrors with exponential backoff. The last
// error propagates once attempts are exhausted.
void with_retries(const RetryPolicy& policy, const std::function<void()>& fn);

// Percent-encodes everything outside the unreserved set and '/'.
std::string url_encode(const std::string& s);

} // namespace pvvtt
