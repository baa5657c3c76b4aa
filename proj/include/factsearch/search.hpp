#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "factsearch/chat.hpp"

namespace factsearch {

struct SearchQuery {
    std::string text;                 // content after the directive marker, verbatim
    std::string origin_statement_id;  // bookkeeping only; never sent to a backend
};

struct WebResult {
    std::string title;
    std::string url;
    std::string snippet_or_content;
    int rank = 0;  // 1-based, provider order
};

enum class SearchBackendKind { web_summarized, cohere_style_rag, local_kb, mock };

std::string to_string(SearchBackendKind k);
SearchBackendKind parse_search_backend_kind(std::string_view s);

struct EvidenceSummary {
    std::string text;
    SearchBackendKind backend_kind = SearchBackendKind::mock;
    std::vector<WebResult> results_used;   // web backends
    std::vector<std::string> chunks_used;  // local-kb chunk ids
    SearchQuery query;
};

// Emitted when a backend legitimately finds nothing.
inline constexpr const char* kNoResultsSentinel =
    "No results were found for this query.";

struct SearchConfig {
    SearchBackendKind backend_kind = SearchBackendKind::mock;
    int k = 10;
    std::set<std::string> blocked_domains;  // lowercase registered domains, no scheme
    int per_result_char_cap = 1000;         // content truncation before summarization

    BackendSpec summarizer;  // web-summarized and local-kb
    BackendSpec provider;    // web-summarized: search API endpoint or fixture script
    BackendSpec rag;         // cohere-style-rag chat backend
    std::string mock_fixture;

    // local-kb
    std::string kb_path;
    BackendSpec embedder;       // embedding endpoint (remote-http) or fixture (scripted-mock)
    std::string embed_model;
};

struct KbChunk {
    std::string chunk_id;
    std::string source_title;
    std::string text;
    std::vector<float> embedding;
};

class KbIndex {
public:
    static KbIndex load(const std::filesystem::path& path);
    static KbIndex from_chunks(std::vector<KbChunk> chunks);
    void save(const std::filesystem::path& path) const;

    size_t dimension() const { return dimension_; }
    size_t size() const { return chunks_.size(); }
    const std::vector<KbChunk>& chunks() const { return chunks_; }

private:
    size_t dimension_ = 0;
    std::vector<KbChunk> chunks_;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<float> embed(const std::string& text) = 0;
};

// POST {model, input:[text]} -> {data:[{embedding:[...]}]}
std::unique_ptr<Embedder> make_http_embedder(const BackendSpec& spec, std::string model);
// JSON file {"<text>": [floats], ...}
std::unique_ptr<Embedder> make_fixture_embedder(const std::filesystem::path& path);
std::unique_ptr<Embedder> make_embedder(const SearchConfig& cfg);

// Fixed-size character windows with overlap.
std::vector<std::string> chunk_text(const std::string& text, size_t window, size_t overlap);

// At most cfg.k results in provider order. Hosts matching a blocked domain
// (or subdomain) are removed before the k-cut; the provider is over-fetched
// at 2k so blocking does not silently shrink the result set.
std::vector<WebResult> web_search(const SearchQuery& query, const SearchConfig& cfg);

// One summarizer call on the verbatim summarization template; empty result
// lists short-circuit to the no-results sentinel without a model call.
EvidenceSummary summarize_results(const SearchQuery& query, const std::vector<WebResult>& results,
                                  const BackendSpec& summarizer, ChatGateway& gateway,
                                  int per_result_char_cap = 1000);

// Exact top-k by cosine similarity, ties broken by chunk_id ascending.
std::vector<KbChunk> kb_retrieve(const std::vector<float>& query_embedding, const KbIndex& index,
                                 size_t k);
std::vector<KbChunk> kb_retrieve(const SearchQuery& query, const KbIndex& index, size_t k,
                                 Embedder& embedder);

// Dispatch on cfg.backend_kind; provenance is kept on the summary.
EvidenceSummary answer_query(const SearchQuery& query, const SearchConfig& cfg, ChatGateway& gateway);

}  // namespace factsearch
