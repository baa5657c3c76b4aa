#include "factsearch/search.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "factsearch/domains.hpp"
#include "factsearch/errors.hpp"
#include "factsearch/prompts.hpp"
#include "factsearch/util.hpp"
#include "http_client.hpp"

namespace factsearch {

std::string to_string(SearchBackendKind k) {
    switch (k) {
        case SearchBackendKind::web_summarized: return "web-summarized";
        case SearchBackendKind::cohere_style_rag: return "cohere-style-rag";
        case SearchBackendKind::local_kb: return "local-kb";
        case SearchBackendKind::mock: return "mock";
    }
    return "?";
}

SearchBackendKind parse_search_backend_kind(std::string_view s) {
    if (s == "web-summarized") return SearchBackendKind::web_summarized;
    if (s == "cohere-style-rag") return SearchBackendKind::cohere_style_rag;
    if (s == "local-kb") return SearchBackendKind::local_kb;
    if (s == "mock") return SearchBackendKind::mock;
    throw ConfigError("unknown search backend kind: \"" + std::string(s) + "\"");
}

namespace {

const PromptLibrary& builtin_prompts() {
    static const PromptLibrary lib = PromptLibrary::builtin();
    return lib;
}

std::string url_encode(std::string_view s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 0xF];
        }
    }
    return out;
}

WebResult result_from_json(const nlohmann::json& j, int rank) {
    WebResult r;
    r.title = j.value("title", "");
    if (j.contains("url"))
        r.url = j["url"].get<std::string>();
    else
        r.url = j.value("href", "");
    if (j.contains("snippet"))
        r.snippet_or_content = j["snippet"].get<std::string>();
    else if (j.contains("body"))
        r.snippet_or_content = j["body"].get<std::string>();
    else
        r.snippet_or_content = j.value("content", "");
    r.rank = rank;
    return r;
}

std::vector<WebResult> results_from_json(const nlohmann::json& j) {
    const nlohmann::json* arr = &j;
    if (j.is_object() && j.contains("results")) arr = &j["results"];
    if (!arr->is_array()) throw FormatError("search results payload must be an array");
    std::vector<WebResult> out;
    int rank = 1;
    for (const auto& item : *arr) out.push_back(result_from_json(item, rank++));
    return out;
}

// Raw provider results before blocking/truncation.
std::vector<WebResult> provider_fetch(const SearchQuery& query, const SearchConfig& cfg,
                                      int fetch_count) {
    const BackendSpec& provider = cfg.provider;
    if (provider.kind == BackendKind::scripted_mock) {
        if (provider.script.empty())
            throw ConfigError("web provider fixture path missing");
        nlohmann::json fixture = nlohmann::json::parse(read_file(provider.script));
        if (!fixture.contains(query.text))
            throw FixtureMissError("web provider fixture has no entry for query \"" + query.text + "\"");
        auto all = results_from_json(fixture[query.text]);
        if (static_cast<int>(all.size()) > fetch_count) all.resize(fetch_count);
        return all;
    }
    if (provider.endpoint.empty()) throw ConfigError("web provider endpoint missing");
    auto url = net::split_url(provider.endpoint);
    std::string sep = url.path.find('?') == std::string::npos ? "?" : "&";
    url.path += sep + "q=" + url_encode(query.text) + "&max_results=" + std::to_string(fetch_count);
    const std::string bearer = net::bearer_from_env(provider.credential_env);
    auto limiter = RateLimiter::for_endpoint(provider.endpoint, provider.limit);
    limiter->acquire();
    struct Release {
        RateLimiter* l;
        ~Release() { l->release(); }
    } guard{limiter.get()};
    auto result = net::with_retries(provider.retry,
                                    [&] { return net::get(url, bearer, provider.timeout_ms); });
    try {
        return results_from_json(nlohmann::json::parse(result.body));
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(result.status, std::string("unparseable search reply: ") + e.what());
    }
}

std::string render_results_block(const std::vector<WebResult>& results, int char_cap) {
    std::string out;
    for (const auto& r : results) {
        std::string content = r.snippet_or_content;
        if (char_cap > 0 && content.size() > static_cast<size_t>(char_cap))
            content.resize(static_cast<size_t>(char_cap));
        out += "[" + std::to_string(r.rank) + "] " + r.title + "\n";
        if (!r.url.empty()) out += "URL: " + r.url + "\n";
        out += content + "\n\n";
    }
    return trim(out);
}

}  // namespace

std::vector<WebResult> web_search(const SearchQuery& query, const SearchConfig& cfg) {
    if (cfg.k < 1) throw ConfigError("search k must be >= 1");
    // over-fetch so blocking does not shrink the set below k when avoidable
    auto raw = provider_fetch(query, cfg, cfg.k * 2);
    std::vector<WebResult> kept;
    for (const auto& r : raw) {
        auto host = host_of_url(r.url);
        if (!host) continue;
        if (host_blocked(*host, cfg.blocked_domains)) continue;
        kept.push_back(r);
        if (static_cast<int>(kept.size()) == cfg.k) break;
    }
    for (size_t i = 0; i < kept.size(); ++i) kept[i].rank = static_cast<int>(i + 1);
    return kept;
}

EvidenceSummary summarize_results(const SearchQuery& query, const std::vector<WebResult>& results,
                                  const BackendSpec& summarizer, ChatGateway& gateway,
                                  int per_result_char_cap) {
    EvidenceSummary summary;
    summary.query = query;
    summary.results_used = results;
    summary.backend_kind = SearchBackendKind::web_summarized;
    if (results.empty()) {
        summary.text = kNoResultsSentinel;
        return summary;
    }
    std::string prompt = render_template(builtin_prompts().get("summarize-results"),
                                         {{"query", query.text},
                                          {"results", render_results_block(results, per_result_char_cap)}});
    ChatRequest request;
    request.model_id = summarizer.model;
    request.messages = {user_msg(prompt)};
    summary.text = gateway.complete(summarizer, request).text;
    return summary;
}

KbIndex KbIndex::from_chunks(std::vector<KbChunk> chunks) {
    KbIndex index;
    if (!chunks.empty()) {
        index.dimension_ = chunks.front().embedding.size();
        for (const auto& c : chunks) {
            if (c.embedding.size() != index.dimension_)
                throw FormatError("chunk \"" + c.chunk_id + "\" embedding dimension " +
                                  std::to_string(c.embedding.size()) + " != index dimension " +
                                  std::to_string(index.dimension_));
            for (float v : c.embedding)
                if (!std::isfinite(v))
                    throw FormatError("chunk \"" + c.chunk_id + "\" has a non-finite embedding value");
        }
    }
    index.chunks_ = std::move(chunks);
    return index;
}

namespace {

constexpr char kKbMagic[8] = {'F', 'S', 'K', 'B', '0', '0', '0', '1'};

template <typename T>
void write_le(std::ofstream& out, T value) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    T value = 0;
    for (size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(buf[i]) << (8 * i);
    return value;
}

void write_string(std::ofstream& out, const std::string& s) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in) {
    auto len = read_le<std::uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}

}  // namespace

void KbIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write vector file: " + path.string());
    out.write(kKbMagic, sizeof(kKbMagic));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dimension_));
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(chunks_.size()));
    for (const auto& c : chunks_) {
        write_string(out, c.chunk_id);
        write_string(out, c.source_title);
        write_string(out, c.text);
        for (float v : c.embedding) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            write_le<std::uint32_t>(out, bits);
        }
    }
}

KbIndex KbIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open vector file: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kKbMagic, sizeof(magic)) != 0)
        throw FormatError("not a vector file (bad magic): " + path.string());
    KbIndex index;
    index.dimension_ = read_le<std::uint32_t>(in);
    auto count = read_le<std::uint64_t>(in);
    index.chunks_.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        KbChunk c;
        c.chunk_id = read_string(in);
        c.source_title = read_string(in);
        c.text = read_string(in);
        c.embedding.resize(index.dimension_);
        for (size_t d = 0; d < index.dimension_; ++d) {
            std::uint32_t bits = read_le<std::uint32_t>(in);
            std::memcpy(&c.embedding[d], &bits, sizeof(bits));
        }
        if (!in) throw FormatError("truncated vector file: " + path.string());
        index.chunks_.push_back(std::move(c));
    }
    return index;
}

std::vector<KbChunk> kb_retrieve(const std::vector<float>& query_embedding, const KbIndex& index,
                                 size_t k) {
    if (index.size() > 0 && query_embedding.size() != index.dimension())
        throw FormatError("query embedding dimension " + std::to_string(query_embedding.size()) +
                          " != index dimension " + std::to_string(index.dimension()));
    double qnorm = 0;
    for (float v : query_embedding) qnorm += static_cast<double>(v) * v;
    qnorm = std::sqrt(qnorm);

    std::vector<std::pair<double, size_t>> scored;
    scored.reserve(index.size());
    for (size_t i = 0; i < index.size(); ++i) {
        const auto& c = index.chunks()[i];
        double dot = 0, cnorm = 0;
        for (size_t d = 0; d < c.embedding.size(); ++d) {
            dot += static_cast<double>(c.embedding[d]) * query_embedding[d];
            cnorm += static_cast<double>(c.embedding[d]) * c.embedding[d];
        }
        cnorm = std::sqrt(cnorm);
        double sim = (qnorm == 0 || cnorm == 0) ? 0.0 : dot / (qnorm * cnorm);
        scored.emplace_back(sim, i);
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return index.chunks()[a.second].chunk_id < index.chunks()[b.second].chunk_id;
    });
    if (scored.size() > k) scored.resize(k);
    std::vector<KbChunk> out;
    out.reserve(scored.size());
    for (const auto& [sim, i] : scored) out.push_back(index.chunks()[i]);
    return out;
}

std::vector<KbChunk> kb_retrieve(const SearchQuery& query, const KbIndex& index, size_t k,
                                 Embedder& embedder) {
    return kb_retrieve(embedder.embed(query.text), index, k);
}

namespace {

class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(BackendSpec spec, std::string model) : spec_(std::move(spec)), model_(std::move(model)) {}

    std::vector<float> embed(const std::string& text) override {
        nlohmann::json body;
        body["model"] = model_;
        body["input"] = nlohmann::json::array({text});
        auto url = net::split_url(spec_.endpoint);
        const std::string bearer = net::bearer_from_env(spec_.credential_env);
        auto limiter = RateLimiter::for_endpoint(spec_.endpoint, spec_.limit);
        limiter->acquire();
        struct Release {
            RateLimiter* l;
            ~Release() { l->release(); }
        } guard{limiter.get()};
        auto result = net::with_retries(spec_.retry, [&] {
            return net::post_json(url, body.dump(), bearer, spec_.timeout_ms);
        });
        try {
            auto reply = nlohmann::json::parse(result.body);
            return reply.at("data").at(0).at("embedding").get<std::vector<float>>();
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(result.status, std::string("unparseable embedding reply: ") + e.what());
        }
    }

private:
    BackendSpec spec_;
    std::string model_;
};

class FixtureEmbedder final : public Embedder {
public:
    explicit FixtureEmbedder(const std::filesystem::path& path) {
        auto j = nlohmann::json::parse(read_file(path));
        for (auto it = j.begin(); it != j.end(); ++it)
            vectors_[it.key()] = it.value().get<std::vector<float>>();
    }

    std::vector<float> embed(const std::string& text) override {
        auto it = vectors_.find(text);
        if (it == vectors_.end())
            throw FixtureMissError("embedding fixture has no entry for \"" + text + "\"");
        return it->second;
    }

private:
    std::unordered_map<std::string, std::vector<float>> vectors_;
};

}  // namespace

std::unique_ptr<Embedder> make_http_embedder(const BackendSpec& spec, std::string model) {
    return std::make_unique<HttpEmbedder>(spec, std::move(model));
}

std::unique_ptr<Embedder> make_fixture_embedder(const std::filesystem::path& path) {
    return std::make_unique<FixtureEmbedder>(path);
}

std::unique_ptr<Embedder> make_embedder(const SearchConfig& cfg) {
    if (cfg.embedder.kind == BackendKind::scripted_mock) {
        if (cfg.embedder.script.empty()) throw ConfigError("embedding fixture path missing");
        return make_fixture_embedder(cfg.embedder.script);
    }
    if (cfg.embedder.endpoint.empty()) throw ConfigError("embedding endpoint missing");
    return make_http_embedder(cfg.embedder, cfg.embed_model.empty() ? cfg.embedder.model : cfg.embed_model);
}

std::vector<std::string> chunk_text(const std::string& text, size_t window, size_t overlap) {
    if (window == 0) throw ConfigError("chunk window must be > 0");
    if (overlap >= window) throw ConfigError("chunk overlap must be smaller than the window");
    std::vector<std::string> chunks;
    size_t step = window - overlap;
    for (size_t pos = 0; pos < text.size(); pos += step) {
        chunks.push_back(text.substr(pos, window));
        if (pos + window >= text.size()) break;
    }
    return chunks;
}

namespace {

// Indices and fixtures are immutable once loaded; share them process-wide.
const KbIndex& shared_index(const std::string& path) {
    static std::mutex mutex;
    static std::unordered_map<std::string, std::unique_ptr<KbIndex>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(path);
    if (it == cache.end())
        it = cache.emplace(path, std::make_unique<KbIndex>(KbIndex::load(path))).first;
    return *it->second;
}

EvidenceSummary mock_answer(const SearchQuery& query, const SearchConfig& cfg) {
    if (cfg.mock_fixture.empty()) throw ConfigError("mock search backend needs a fixture path");
    auto j = nlohmann::json::parse(read_file(cfg.mock_fixture));
    EvidenceSummary summary;
    summary.query = query;
    summary.backend_kind = SearchBackendKind::mock;
    const nlohmann::json* entry = nullptr;
    if (j.contains(query.text))
        entry = &j[query.text];
    else if (j.contains("__default__"))
        entry = &j["__default__"];
    else
        throw FixtureMissError("search mock has no entry for query \"" + query.text + "\"");
    if (entry->is_string()) {
        summary.text = entry->get<std::string>();
    } else {
        summary.text = entry->at("text").get<std::string>();
        if (entry->contains("results")) summary.results_used = results_from_json((*entry)["results"]);
    }
    return summary;
}

}  // namespace

EvidenceSummary answer_query(const SearchQuery& query, const SearchConfig& cfg, ChatGateway& gateway) {
    switch (cfg.backend_kind) {
        case SearchBackendKind::web_summarized: {
            auto results = web_search(query, cfg);
            auto summary = summarize_results(query, results, cfg.summarizer, gateway,
                                             cfg.per_result_char_cap);
            summary.backend_kind = SearchBackendKind::web_summarized;
            return summary;
        }
        case SearchBackendKind::cohere_style_rag: {
            std::string prompt =
                render_template(builtin_prompts().get("rag-lookup"), {{"query", query.text}});
            ChatRequest request;
            request.model_id = cfg.rag.model;
            request.messages = {user_msg(prompt)};
            EvidenceSummary summary;
            summary.query = query;
            summary.backend_kind = SearchBackendKind::cohere_style_rag;
            summary.text = gateway.complete(cfg.rag, request).text;
            return summary;
        }
        case SearchBackendKind::local_kb: {
            if (cfg.kb_path.empty()) throw ConfigError("local-kb backend needs kb_path");
            const KbIndex& index = shared_index(cfg.kb_path);
            auto embedder = make_embedder(cfg);
            auto chunks = kb_retrieve(query, index, static_cast<size_t>(cfg.k), *embedder);
            std::vector<WebResult> as_results;
            for (size_t i = 0; i < chunks.size(); ++i)
                as_results.push_back({chunks[i].source_title, "", chunks[i].text,
                                      static_cast<int>(i + 1)});
            auto summary = summarize_results(query, as_results, cfg.summarizer, gateway,
                                             cfg.per_result_char_cap);
            summary.backend_kind = SearchBackendKind::local_kb;
            summary.results_used.clear();  // provenance for kb is the chunk id list
            for (const auto& c : chunks) summary.chunks_used.push_back(c.chunk_id);
            return summary;
        }
        case SearchBackendKind::mock:
            return mock_answer(query, cfg);
    }
    throw ConfigError("unknown search backend kind");
}

}  // namespace factsearch
