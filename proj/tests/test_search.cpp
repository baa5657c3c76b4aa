#include <doctest.h>

#include <random>

#include "factsearch/errors.hpp"
#include "factsearch/prompts.hpp"
#include "factsearch/search.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace factsearch;

namespace {

// web provider fixture: query -> 12 results, three on politifact hosts
void write_web_fixture(const std::filesystem::path& path) {
    nlohmann::json results = nlohmann::json::array();
    for (int i = 1; i <= 12; ++i) {
        std::string host;
        if (i == 1) host = "www.politifact.com";
        else if (i == 5) host = "politifact.com";
        else if (i == 9) host = "sub.politifact.com";
        else host = "site" + std::to_string(i) + ".example.com";
        results.push_back({{"title", "Result " + std::to_string(i)},
                           {"url", "https://" + host + "/article" + std::to_string(i)},
                           {"snippet", "Snippet body " + std::to_string(i)}});
    }
    nlohmann::json fixture;
    fixture["Historical price of oil in June 2008"] = results;
    fstest::write_text(path, fixture.dump());
}

SearchConfig web_config(const std::filesystem::path& fixture, int k) {
    SearchConfig cfg;
    cfg.backend_kind = SearchBackendKind::web_summarized;
    cfg.k = k;
    cfg.provider.kind = BackendKind::scripted_mock;
    cfg.provider.script = fixture.string();
    return cfg;
}

const SearchQuery kOilQuery{"Historical price of oil in June 2008", "stmt-1"};

}  // namespace

TEST_CASE("web_search preserves provider order and caps at k") {
    fstest::TempDir tmp;
    write_web_fixture(tmp.file("web.json"));
    auto results = web_search(kOilQuery, web_config(tmp.file("web.json"), 10));
    REQUIRE(results.size() == 10);  // 12 in the fixture, no blocklist
    for (size_t i = 0; i < results.size(); ++i) {
        CHECK(results[i].rank == static_cast<int>(i) + 1);
        CHECK(results[i].title == "Result " + std::to_string(i + 1));
    }
}

TEST_CASE("web_search blocklist removes hosts before the k cut") {
    fstest::TempDir tmp;
    write_web_fixture(tmp.file("web.json"));
    SearchConfig cfg = web_config(tmp.file("web.json"), 10);
    cfg.blocked_domains = {"politifact.com"};
    auto results = web_search(kOilQuery, cfg);
    CHECK(results.size() == 9);  // 12 minus 3 blocked
    for (const auto& r : results) {
        CHECK(r.url.find("politifact") == std::string::npos);
    }
    // later ranks promoted: contiguous 1..9 and provider order kept
    for (size_t i = 0; i < results.size(); ++i) CHECK(results[i].rank == static_cast<int>(i) + 1);
    CHECK(results[0].title == "Result 2");  // rank-1 politifact row dropped
}

TEST_CASE("web_search k prefix property") {
    fstest::TempDir tmp;
    write_web_fixture(tmp.file("web.json"));
    SearchConfig cfg = web_config(tmp.file("web.json"), 10);
    cfg.blocked_domains = {"politifact.com"};
    auto at = [&](int k) {
        SearchConfig c = cfg;
        c.k = k;
        return web_search(kOilQuery, c);
    };
    auto k10 = at(10);
    for (int k : {2, 5}) {
        auto smaller = at(k);
        REQUIRE(smaller.size() == static_cast<size_t>(k));
        for (int i = 0; i < k; ++i) CHECK(smaller[i].url == k10[i].url);
    }
}

TEST_CASE("web_search empty provider result is not an error") {
    fstest::TempDir tmp;
    nlohmann::json fixture;
    fixture["nothing here"] = nlohmann::json::array();
    fstest::write_text(tmp.file("web.json"), fixture.dump());
    auto results = web_search({"nothing here", "s"}, web_config(tmp.file("web.json"), 10));
    CHECK(results.empty());
}

TEST_CASE("summarize_results substitutes the verbatim template") {
    fstest::TempDir tmp;
    nlohmann::json script = nlohmann::json::array();
    script.push_back({{"match", {{"substring", "Please summarize the searched information"}}},
                      {"response", "echo summary"}});
    fstest::write_text(tmp.file("summarizer.json"), script.dump());
    BackendSpec summarizer;
    summarizer.kind = BackendKind::scripted_mock;
    summarizer.script = tmp.file("summarizer.json").string();
    summarizer.model = "sum-model";

    ChatGateway gateway;
    std::vector<ChatRequest> captured;
    gateway.set_request_observer([&](const ChatRequest& r) { captured.push_back(r); });

    std::vector<WebResult> results = {{"T1", "https://a.example.com/1", "body one", 1},
                                      {"T2", "https://b.example.com/2", "body two", 2}};
    EvidenceSummary summary = summarize_results(kOilQuery, results, summarizer, gateway);
    CHECK(summary.text == "echo summary");
    CHECK(summary.results_used.size() == 2);

    REQUIRE(captured.size() == 1);
    const std::string& prompt = captured[0].messages.back().content;
    CHECK(prompt.find("Query: Historical price of oil in June 2008") != std::string::npos);
    CHECK(prompt.find("taking into account the diversity and accuracy") != std::string::npos);
    CHECK(prompt.find("body one") != std::string::npos);
    CHECK(prompt.find("https://b.example.com/2") != std::string::npos);
}

TEST_CASE("summarize_results honors the per-result content cap") {
    fstest::TempDir tmp;
    nlohmann::json script = nlohmann::json::array();
    script.push_back({{"match", {{"substring", ""}}}, {"response", "ok"}});
    fstest::write_text(tmp.file("summarizer.json"), script.dump());
    BackendSpec summarizer;
    summarizer.kind = BackendKind::scripted_mock;
    summarizer.script = tmp.file("summarizer.json").string();

    ChatGateway gateway;
    std::string captured_prompt;
    gateway.set_request_observer(
        [&](const ChatRequest& r) { captured_prompt = r.messages.back().content; });
    std::vector<WebResult> results = {{"T", "https://a.example.com/", std::string(500, 'x'), 1}};
    summarize_results(kOilQuery, results, summarizer, gateway, 100);
    CHECK(captured_prompt.find(std::string(100, 'x')) != std::string::npos);
    CHECK(captured_prompt.find(std::string(101, 'x')) == std::string::npos);
}

TEST_CASE("summarize_results empty input short-circuits to the sentinel") {
    BackendSpec summarizer;  // a miss would throw if it were ever called
    summarizer.kind = BackendKind::scripted_mock;
    summarizer.script = "/nonexistent.json";
    ChatGateway gateway;
    EvidenceSummary summary = summarize_results(kOilQuery, {}, summarizer, gateway);
    CHECK(summary.text == kNoResultsSentinel);
    CHECK(summary.results_used.empty());
}

namespace {

KbIndex random_index(size_t n, size_t dim, std::mt19937& rng) {
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::vector<KbChunk> chunks;
    for (size_t i = 0; i < n; ++i) {
        KbChunk c;
        char id[16];
        std::snprintf(id, sizeof(id), "c%05zu", i);
        c.chunk_id = id;
        c.source_title = "src";
        c.text = "chunk " + std::to_string(i);
        c.embedding.resize(dim);
        for (auto& v : c.embedding) v = dist(rng);
        chunks.push_back(std::move(c));
    }
    return KbIndex::from_chunks(std::move(chunks));
}

}  // namespace

TEST_CASE("kb_retrieve self-similarity ranks the identical vector first") {
    std::mt19937 rng(7);
    KbIndex index = random_index(50, 16, rng);
    const auto& probe = index.chunks()[31];
    auto top = kb_retrieve(probe.embedding, index, 5);
    REQUIRE(!top.empty());
    CHECK(top[0].chunk_id == probe.chunk_id);
}

TEST_CASE("kb_retrieve matches the full-sort oracle on random vectors") {
    std::mt19937 rng(99);
    KbIndex index = random_index(300, 24, rng);
    std::vector<std::vector<float>> vectors;
    std::vector<std::string> ids;
    for (const auto& c : index.chunks()) {
        vectors.push_back(c.embedding);
        ids.push_back(c.chunk_id);
    }
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (int round = 0; round < 25; ++round) {
        std::vector<float> query(24);
        for (auto& v : query) v = dist(rng);
        for (size_t k : {1UL, 10UL, 20UL}) {
            auto got = kb_retrieve(query, index, k);
            auto want = oracle::top_k_cosine(vectors, ids, query, k);
            REQUIRE(got.size() == want.size());
            for (size_t i = 0; i < got.size(); ++i) CHECK(got[i].chunk_id == ids[want[i]]);
        }
    }
}

TEST_CASE("kb_retrieve prefix property and tie-breaking") {
    std::mt19937 rng(3);
    KbIndex index = random_index(100, 8, rng);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::vector<float> query(8);
    for (auto& v : query) v = dist(rng);
    auto k20 = kb_retrieve(query, index, 20);
    auto k10 = kb_retrieve(query, index, 10);
    REQUIRE(k10.size() == 10);
    for (size_t i = 0; i < 10; ++i) CHECK(k10[i].chunk_id == k20[i].chunk_id);

    // duplicate vectors tie; ascending chunk_id decides
    std::vector<KbChunk> dup;
    for (int i : {3, 1, 2}) {
        KbChunk c;
        c.chunk_id = "dup" + std::to_string(i);
        c.embedding = {1.0f, 0.0f};
        c.text = "same";
        dup.push_back(c);
    }
    KbIndex tied = KbIndex::from_chunks(std::move(dup));
    auto order = kb_retrieve(std::vector<float>{1.0f, 0.0f}, tied, 3);
    CHECK(order[0].chunk_id == "dup1");
    CHECK(order[1].chunk_id == "dup2");
    CHECK(order[2].chunk_id == "dup3");
}

TEST_CASE("kb_retrieve rejects dimension mismatches") {
    std::mt19937 rng(5);
    KbIndex index = random_index(10, 8, rng);
    CHECK_THROWS_AS(kb_retrieve(std::vector<float>(4, 0.1f), index, 3), FormatError);
}

TEST_CASE("vector file round trips exactly") {
    fstest::TempDir tmp;
    std::mt19937 rng(11);
    KbIndex index = random_index(17, 6, rng);
    index.save(tmp.file("kb.fskb"));
    KbIndex loaded = KbIndex::load(tmp.file("kb.fskb"));
    REQUIRE(loaded.size() == index.size());
    REQUIRE(loaded.dimension() == index.dimension());
    for (size_t i = 0; i < index.size(); ++i) {
        CHECK(loaded.chunks()[i].chunk_id == index.chunks()[i].chunk_id);
        CHECK(loaded.chunks()[i].text == index.chunks()[i].text);
        CHECK(loaded.chunks()[i].embedding == index.chunks()[i].embedding);  // bit-exact
    }
}

TEST_CASE("vector file load rejects other files") {
    fstest::TempDir tmp;
    fstest::write_text(tmp.file("junk.bin"), "this is not a vector file");
    CHECK_THROWS_AS(KbIndex::load(tmp.file("junk.bin")), FormatError);
}

TEST_CASE("chunk_text windows with overlap") {
    auto chunks = chunk_text("abcdefghij", 4, 1);
    CHECK(chunks == std::vector<std::string>{"abcd", "defg", "ghij"});
    CHECK(chunk_text("", 4, 1).empty());
    CHECK(chunk_text("ab", 4, 1) == std::vector<std::string>{"ab"});
    CHECK_THROWS_AS(chunk_text("abc", 4, 4), ConfigError);
}

TEST_CASE("answer_query mock backend maps query to summary") {
    fstest::TempDir tmp;
    nlohmann::json fixture;
    fixture["q1"] = "summary one";
    fixture["q2"] = {{"text", "summary two"},
                     {"results", nlohmann::json::array({{{"title", "T"},
                                                         {"url", "https://x.example.com/"},
                                                         {"snippet", "s"}}})}};
    fstest::write_text(tmp.file("mock.json"), fixture.dump());
    SearchConfig cfg;
    cfg.backend_kind = SearchBackendKind::mock;
    cfg.mock_fixture = tmp.file("mock.json").string();
    ChatGateway gateway;
    CHECK(answer_query({"q1", "s"}, cfg, gateway).text == "summary one");
    auto with_results = answer_query({"q2", "s"}, cfg, gateway);
    CHECK(with_results.text == "summary two");
    REQUIRE(with_results.results_used.size() == 1);
    CHECK(with_results.results_used[0].url == "https://x.example.com/");
    CHECK_THROWS_AS(answer_query({"q3", "s"}, cfg, gateway), FixtureMissError);
}

TEST_CASE("answer_query cohere-style backend sends the lookup template only") {
    fstest::TempDir tmp;
    nlohmann::json script = nlohmann::json::array();
    script.push_back({{"match", {{"substring", "Look up info about the following:"}}},
                      {"response", "rag answer"}});
    fstest::write_text(tmp.file("rag.json"), script.dump());
    SearchConfig cfg;
    cfg.backend_kind = SearchBackendKind::cohere_style_rag;
    cfg.rag.kind = BackendKind::scripted_mock;
    cfg.rag.script = tmp.file("rag.json").string();
    cfg.rag.model = "command";

    ChatGateway gateway;
    std::vector<ChatRequest> captured;
    gateway.set_request_observer([&](const ChatRequest& r) { captured.push_back(r); });

    const std::string statement_text = "The moon is made of green cheese per senator X.";
    SearchQuery query{"moon composition evidence", "stmt-77"};
    EvidenceSummary summary = answer_query(query, cfg, gateway);
    CHECK(summary.text == "rag answer");
    CHECK(summary.backend_kind == SearchBackendKind::cohere_style_rag);

    // statement isolation: the backend payload carries the query text and
    // nothing from the statement (not even its id)
    REQUIRE(captured.size() == 1);
    REQUIRE(captured[0].messages.size() == 1);
    CHECK(captured[0].messages[0].content ==
          "Look up info about the following: moon composition evidence");
    CHECK(captured[0].messages[0].content.find(statement_text) == std::string::npos);
    CHECK(captured[0].messages[0].content.find("stmt-77") == std::string::npos);
}

TEST_CASE("answer_query local-kb retrieves then summarizes with provenance") {
    fstest::TempDir tmp;
    // 5-chunk toy index with an obvious best match
    std::vector<KbChunk> chunks;
    for (int i = 0; i < 5; ++i) {
        KbChunk c;
        c.chunk_id = "k" + std::to_string(i);
        c.source_title = "wiki-" + std::to_string(i);
        c.text = "text of chunk " + std::to_string(i);
        c.embedding = {float(i == 2), float(i == 3), 1.0f};
        chunks.push_back(c);
    }
    KbIndex::from_chunks(chunks).save(tmp.file("toy.fskb"));

    nlohmann::json embed_fixture;
    embed_fixture["which chunk"] = {1.0, 0.0, 0.0};
    fstest::write_text(tmp.file("embed.json"), embed_fixture.dump());

    nlohmann::json script = nlohmann::json::array();
    script.push_back({{"match", {{"substring", ""}}}, {"response", "kb summary"}});
    fstest::write_text(tmp.file("sum.json"), script.dump());

    SearchConfig cfg;
    cfg.backend_kind = SearchBackendKind::local_kb;
    cfg.kb_path = tmp.file("toy.fskb").string();
    cfg.k = 2;
    cfg.embedder.kind = BackendKind::scripted_mock;
    cfg.embedder.script = tmp.file("embed.json").string();
    cfg.summarizer.kind = BackendKind::scripted_mock;
    cfg.summarizer.script = tmp.file("sum.json").string();

    ChatGateway gateway;
    EvidenceSummary summary = answer_query({"which chunk", "s"}, cfg, gateway);
    CHECK(summary.text == "kb summary");
    CHECK(summary.backend_kind == SearchBackendKind::local_kb);
    REQUIRE(summary.chunks_used.size() == 2);
    CHECK(summary.chunks_used[0] == "k2");  // cosine-closest to the query vector
}
