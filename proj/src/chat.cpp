#include "factsearch/chat.hpp"

#include <nlohmann/json.hpp>

#include "factsearch/errors.hpp"
#include "factsearch/util.hpp"

namespace factsearch {

std::string to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "?";
}

Role parse_role(std::string_view s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw FormatError("unknown message role: \"" + std::string(s) + "\"");
}

std::string cache_key(const ChatRequest& request, std::string_view salt) {
    nlohmann::json j;
    j["model"] = request.model_id;
    j["temperature"] = request.temperature;
    auto msgs = nlohmann::json::array();
    for (const auto& m : request.messages) msgs.push_back({to_string(m.role), m.content});
    j["messages"] = msgs;
    if (!salt.empty()) j["salt"] = std::string(salt);
    return sha256_hex(j.dump());
}

std::string to_canonical_json(const ChatResponse& response) {
    nlohmann::json j;
    j["text"] = response.text;
    j["model"] = response.model_id;
    j["usage"] = {{"prompt", response.usage.prompt}, {"completion", response.usage.completion}};
    return j.dump();
}

ChatResponse chat_response_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ChatResponse r;
    r.text = j.at("text").get<std::string>();
    r.model_id = j.value("model", "");
    if (j.contains("usage")) {
        r.usage.prompt = j["usage"].value("prompt", 0L);
        r.usage.completion = j["usage"].value("completion", 0L);
    }
    return r;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::optional<ChatResponse> ResponseCache::fetch(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto path = dir_ / (key + ".json");
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        ChatResponse r = chat_response_from_json(read_file(path));
        r.from_cache = true;
        return r;
    } catch (const std::exception&) {
        return std::nullopt;  // torn or corrupt record: treat as a miss
    }
}

void ResponseCache::store(const std::string& key, const ChatResponse& response) {
    std::lock_guard lock(mutex_);
    write_file_atomic(dir_ / (key + ".json"), to_canonical_json(response));
}

ScriptedChat ScriptedChat::load(const std::filesystem::path& script_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(script_path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("invalid mock script " + script_path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw FormatError("mock script must be a JSON array: " + script_path.string());
    ScriptedChat script;
    for (const auto& entry : j) {
        Rule rule;
        const auto& match = entry.at("match");
        if (match.contains("hash")) {
            rule.by_hash = true;
            rule.pattern = match["hash"].get<std::string>();
        } else if (match.contains("substring")) {
            rule.pattern = match["substring"].get<std::string>();
        } else {
            throw FormatError("mock script rule needs match.hash or match.substring");
        }
        const auto& resp = entry.at("response");
        if (resp.is_string()) {
            rule.text = resp.get<std::string>();
        } else {
            rule.text = resp.at("text").get<std::string>();
            rule.prompt_tokens = resp.value("prompt_tokens", 0L);
            rule.completion_tokens = resp.value("completion_tokens", 0L);
        }
        script.rules_.push_back(std::move(rule));
    }
    return script;
}

void ScriptedChat::add_hash_rule(std::string request_hash, std::string response_text) {
    rules_.push_back({true, std::move(request_hash), std::move(response_text), 0, 0});
}

void ScriptedChat::add_substring_rule(std::string needle, std::string response_text) {
    rules_.push_back({false, std::move(needle), std::move(response_text), 0, 0});
}

ChatResponse ScriptedChat::respond(const ChatRequest& request) const {
    std::string last_user;
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        if (it->role == Role::user) {
            last_user = it->content;
            break;
        }
    }
    const std::string hash = cache_key(request);
    for (const auto& rule : rules_) {
        bool hit = rule.by_hash ? (rule.pattern == hash)
                                : (last_user.find(rule.pattern) != std::string::npos);
        if (hit) {
            ChatResponse r;
            r.text = rule.text;
            r.model_id = request.model_id;
            r.usage = {rule.prompt_tokens, rule.completion_tokens};
            return r;
        }
    }
    throw FixtureMissError("no mock rule matches request (hash " + hash + ", last user message: \"" +
                           last_user.substr(0, 200) + "\")");
}

RateLimiter::RateLimiter(RateLimit limit) : limit_(limit) {}

void RateLimiter::acquire() {
    std::unique_lock lock(mutex_);
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        while (!window_.empty() && now - window_.front() > std::chrono::milliseconds(limit_.window_ms))
            window_.pop_front();
        bool slot_ok = limit_.max_in_flight <= 0 || in_flight_ < limit_.max_in_flight;
        bool rate_ok = limit_.requests_per_window <= 0 ||
                       static_cast<int>(window_.size()) < limit_.requests_per_window;
        if (slot_ok && rate_ok) {
            ++in_flight_;
            window_.push_back(now);
            return;
        }
        if (!rate_ok) {
            auto wake = window_.front() + std::chrono::milliseconds(limit_.window_ms);
            cv_.wait_until(lock, wake);
        } else {
            cv_.wait(lock);
        }
    }
}

void RateLimiter::release() {
    {
        std::lock_guard lock(mutex_);
        --in_flight_;
    }
    cv_.notify_all();
}

std::shared_ptr<RateLimiter> RateLimiter::for_endpoint(const std::string& endpoint, RateLimit limit) {
    static std::mutex registry_mutex;
    static std::map<std::string, std::shared_ptr<RateLimiter>> registry;
    std::lock_guard lock(registry_mutex);
    auto it = registry.find(endpoint);
    if (it == registry.end())
        it = registry.emplace(endpoint, std::make_shared<RateLimiter>(limit)).first;
    return it->second;
}

// in chat_http.cpp
ChatResponse http_chat_complete(const BackendSpec& backend, const ChatRequest& request);

ChatGateway::ChatGateway(std::filesystem::path cache_dir)
    : cache_(std::make_unique<ResponseCache>(std::move(cache_dir))) {}

void ChatGateway::set_request_observer(std::function<void(const ChatRequest&)> observer) {
    std::lock_guard lock(observer_mutex_);
    observer_ = std::move(observer);
}

const ScriptedChat& ChatGateway::script_for(const BackendSpec& backend) {
    std::lock_guard lock(scripts_mutex_);
    auto it = scripts_.find(backend.script);
    if (it == scripts_.end()) it = scripts_.emplace(backend.script, ScriptedChat::load(backend.script)).first;
    return it->second;
}

ChatResponse ChatGateway::dispatch(const BackendSpec& backend, const ChatRequest& request) {
    {
        std::lock_guard lock(observer_mutex_);
        if (observer_) observer_(request);
    }
    switch (backend.kind) {
        case BackendKind::scripted_mock: {
            if (backend.script.empty()) throw ConfigError("scripted-mock backend needs a script path");
            return script_for(backend).respond(request);
        }
        case BackendKind::remote_http: {
            if (backend.endpoint.empty()) throw ConfigError("remote-http backend needs an endpoint");
            auto limiter = RateLimiter::for_endpoint(backend.endpoint, backend.limit);
            limiter->acquire();
            struct Release {
                RateLimiter* l;
                ~Release() { l->release(); }
            } guard{limiter.get()};
            return http_chat_complete(backend, request);
        }
    }
    throw ConfigError("unknown backend kind");
}

ChatResponse ChatGateway::complete(const BackendSpec& backend, const ChatRequest& request,
                                   const CompleteOptions& options) {
    if (request.messages.empty()) throw ConfigError("chat request needs at least one message");
    if (!cache_) return dispatch(backend, request);

    const std::string key = cache_key(request, options.cache_salt);
    if (!options.bypass_cache_read) {
        if (auto hit = cache_->fetch(key)) return *hit;
    }
    ChatResponse fresh = dispatch(backend, request);
    cache_->store(key, fresh);
    return fresh;
}

}  // namespace factsearch
