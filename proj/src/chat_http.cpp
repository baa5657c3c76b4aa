#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "factsearch/errors.hpp"
#include "http_client.hpp"

namespace factsearch::net {

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string bearer_from_env(const std::string& credential_env) {
    if (credential_env.empty()) return {};
    const char* value = std::getenv(credential_env.c_str());
    return value ? value : "";
}

namespace {

httplib::Headers auth_headers(const std::string& bearer) {
    httplib::Headers headers;
    if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);
    return headers;
}

HttpResult to_result(const httplib::Result& res) {
    if (!res) return {0, "", httplib::to_string(res.error())};
    return {res->status, res->body, ""};
}

httplib::Client make_client(const SplitUrl& url, int timeout_ms) {
    httplib::Client client(url.base);
    client.set_connection_timeout(0, timeout_ms * 1000LL);
    client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client.set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client.set_follow_location(true);
    return client;
}

}  // namespace

HttpResult post_json(const SplitUrl& url, const std::string& body, const std::string& bearer,
                     int timeout_ms) {
    auto client = make_client(url, timeout_ms);
    return to_result(client.Post(url.path, auth_headers(bearer), body, "application/json"));
}

HttpResult get(const SplitUrl& url, const std::string& bearer, int timeout_ms) {
    auto client = make_client(url, timeout_ms);
    return to_result(client.Get(url.path, auth_headers(bearer)));
}

HttpResult with_retries(const RetryPolicy& retry, const std::function<HttpResult()>& once) {
    int backoff_ms = retry.backoff_initial_ms;
    HttpResult last;
    for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
        last = once();
        if (last.status >= 200 && last.status < 300) return last;
        bool retryable = last.status == 0 || last.status == 429 || last.status >= 500;
        if (!retryable)
            throw ProviderError(last.status,
                                "provider error " + std::to_string(last.status) + ": " + last.body);
        if (attempt == retry.max_attempts) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms *= 2;
    }
    if (last.status == 0)
        throw TransportError("transport failure after " + std::to_string(retry.max_attempts) +
                             " attempts: " + last.error);
    throw ProviderError(last.status, "provider error " + std::to_string(last.status) + " after " +
                                         std::to_string(retry.max_attempts) + " attempts: " + last.body);
}

}  // namespace factsearch::net

namespace factsearch {

// Wire shape: POST {model, messages:[{role,content}], temperature[, max_tokens]}
// -> {choices:[{message:{content}}][, usage:{prompt_tokens, completion_tokens}]}.
// A bare {text: ...} reply body is accepted from minimal gateways.
ChatResponse http_chat_complete(const BackendSpec& backend, const ChatRequest& request) {
    nlohmann::json body;
    body["model"] = request.model_id;
    body["temperature"] = request.temperature;
    if (request.max_output_tokens) body["max_tokens"] = *request.max_output_tokens;
    auto msgs = nlohmann::json::array();
    for (const auto& m : request.messages)
        msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    body["messages"] = msgs;

    const auto url = net::split_url(backend.endpoint);
    const std::string bearer = net::bearer_from_env(backend.credential_env);
    const std::string payload = body.dump();

    auto result = net::with_retries(backend.retry, [&] {
        return net::post_json(url, payload, bearer, backend.timeout_ms);
    });

    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(result.body);
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(result.status, std::string("unparseable provider reply: ") + e.what());
    }
    ChatResponse response;
    response.model_id = reply.value("model", request.model_id);
    if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
        const auto& choice = reply["choices"][0];
        if (choice.contains("message"))
            response.text = choice["message"].value("content", "");
        else
            response.text = choice.value("text", "");
    } else if (reply.contains("text")) {
        response.text = reply["text"].get<std::string>();
    } else {
        throw ProviderError(result.status, "provider reply has neither choices nor text");
    }
    if (reply.contains("usage")) {
        response.usage.prompt = reply["usage"].value("prompt_tokens", 0L);
        response.usage.completion = reply["usage"].value("completion_tokens", 0L);
    }
    return response;
}

}  // namespace factsearch
