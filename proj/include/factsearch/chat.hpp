#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace factsearch {

enum class Role { system, user, assistant };

std::string to_string(Role r);
Role parse_role(std::string_view s);

struct Message {
    Role role = Role::user;
    std::string content;
};

inline Message system_msg(std::string content) { return {Role::system, std::move(content)}; }
inline Message user_msg(std::string content) { return {Role::user, std::move(content)}; }
inline Message assistant_msg(std::string content) { return {Role::assistant, std::move(content)}; }

struct ChatRequest {
    std::string model_id;
    std::vector<Message> messages;
    double temperature = 1.0;
    std::optional<int> max_output_tokens;
};

struct TokenUsage {
    long prompt = 0;
    long completion = 0;
};

struct ChatResponse {
    std::string text;
    std::string model_id;
    TokenUsage usage;
    bool from_cache = false;
};

enum class BackendKind { remote_http, scripted_mock };

struct RetryPolicy {
    int max_attempts = 4;          // 1 initial try + 3 retries
    int backoff_initial_ms = 250;  // doubles after each failed attempt
};

struct RateLimit {
    int max_in_flight = 4;
    int requests_per_window = 0;  // 0 = unlimited
    int window_ms = 60'000;
};

struct BackendSpec {
    BackendKind kind = BackendKind::scripted_mock;
    std::string endpoint;        // remote-http: full URL of the chat completions route
    std::string credential_env;  // env var holding the bearer token; never a literal secret
    std::string script;          // scripted-mock: fixture file path
    std::string model;           // default model_id for requests built against this backend
    RetryPolicy retry;
    RateLimit limit;
    int timeout_ms = 60'000;
};

// Content hash over (model_id, roles, contents, temperature) plus an optional
// salt; independent of any serialization field order. Used as the cache key
// and as the exact-match key for scripted mocks.
std::string cache_key(const ChatRequest& request, std::string_view salt = {});

// One file per key under the cache directory; value is the canonical JSON
// serialization of the ChatResponse. Writes go through a temp file + rename
// so interrupted runs never leave a torn record.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<ChatResponse> fetch(const std::string& key) const;
    void store(const std::string& key, const ChatResponse& response);

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

// Ordered (matcher, response) script; first match wins. A matcher is either
// the exact request hash (cache_key with no salt) or a substring tested
// against the last user message.
class ScriptedChat {
public:
    static ScriptedChat load(const std::filesystem::path& script_path);
    // Programmatic construction for tests.
    void add_hash_rule(std::string request_hash, std::string response_text);
    void add_substring_rule(std::string needle, std::string response_text);

    ChatResponse respond(const ChatRequest& request) const;  // throws FixtureMissError on miss

private:
    struct Rule {
        bool by_hash = false;
        std::string pattern;
        std::string text;
        long prompt_tokens = 0;
        long completion_tokens = 0;
    };
    std::vector<Rule> rules_;
};

// max-in-flight gate plus a sliding-window request budget, shared globally
// per backend endpoint across all worker threads.
class RateLimiter {
public:
    explicit RateLimiter(RateLimit limit);
    void acquire();
    void release();

    static std::shared_ptr<RateLimiter> for_endpoint(const std::string& endpoint, RateLimit limit);

private:
    RateLimit limit_;
    int in_flight_ = 0;
    std::deque<std::chrono::steady_clock::time_point> window_;
    std::mutex mutex_;
    std::condition_variable cv_;
};

struct CompleteOptions {
    std::string cache_salt;   // e.g. "trial-3" for generator calls
    bool bypass_cache_read = false;
};

// Uniform access to chat-completion backends: HTTP with retries and rate
// limiting, or a scripted mock. Optional persistent response cache.
class ChatGateway {
public:
    ChatGateway() = default;
    explicit ChatGateway(std::filesystem::path cache_dir);

    ChatResponse complete(const BackendSpec& backend, const ChatRequest& request,
                          const CompleteOptions& options = {});

    bool caching() const { return cache_ != nullptr; }

    // Test hook: observe every request that reaches a backend.
    void set_request_observer(std::function<void(const ChatRequest&)> observer);

private:
    ChatResponse dispatch(const BackendSpec& backend, const ChatRequest& request);
    const ScriptedChat& script_for(const BackendSpec& backend);

    std::unique_ptr<ResponseCache> cache_;
    std::map<std::string, ScriptedChat> scripts_;
    std::mutex scripts_mutex_;
    std::function<void(const ChatRequest&)> observer_;
    std::mutex observer_mutex_;
};

// JSON (de)serialization used by the cache and by transcript persistence.
std::string to_canonical_json(const ChatResponse& response);
ChatResponse chat_response_from_json(const std::string& text);

}  // namespace factsearch
