#pragma once

// Internal helpers shared by the chat, web-search and embedding HTTP clients.

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "factsearch/chat.hpp"

namespace factsearch::net {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // starts with '/', may carry a query string
};

SplitUrl split_url(const std::string& url);

struct HttpResult {
    int status = 0;       // 0 = transport failure
    std::string body;
    std::string error;    // transport error description when status == 0
};

HttpResult post_json(const SplitUrl& url, const std::string& body, const std::string& bearer,
                     int timeout_ms);
HttpResult get(const SplitUrl& url, const std::string& bearer, int timeout_ms);

// Runs `once` under the backend's retry policy: retries transport failures
// and HTTP 429/5xx with exponential backoff (b, 2b, 4b, ...); any other
// non-2xx status raises ProviderError immediately.
HttpResult with_retries(const RetryPolicy& retry, const std::function<HttpResult()>& once);

std::string bearer_from_env(const std::string& credential_env);

}  // namespace factsearch::net
