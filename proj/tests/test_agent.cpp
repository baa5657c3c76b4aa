#include <doctest.h>

#include "factsearch/agent.hpp"
#include "factsearch/errors.hpp"
#include "support/fixtures.hpp"

using namespace factsearch;

namespace {

struct DirectiveCase {
    const char* text;
    bool present;
    const char* expected;
};

// Golden set: the published interaction pattern plus adversarial shapes
// (multi-directive, mid-line, absent, casing, whitespace).
const DirectiveCase kDirectiveCases[] = {
    {"Analysis: Let's first search for the historical price of oil in June 2008 and March 2022. "
     "SEARCH: Historical price of oil in June 2008",
     true, "Historical price of oil in June 2008"},
    {"no directive here", false, ""},
    {"SEARCH: a\nSEARCH: b", true, "a"},
    {"SEARCH: query", true, "query"},
    {"SEARCH:query", true, "query"},
    {"search: lowercase", false, ""},
    {"Search: Mixed case", false, ""},
    {"SEARCH : spaced colon", false, ""},
    {"SEARCH:", false, ""},
    {"SEARCH: ", true, ""},
    {"SEARCH:\nnext line", false, ""},
    {"prefix SEARCH: mid-line query tail\nmore text", true, "mid-line query tail"},
    {"RESEARCH: oil price", true, "oil price"},  // substring rule, documented
    {"SEARCH: trailing spaces   ", true, "trailing spaces"},
    {"SEARCH:  double space", true, "double space"},
    {"SEARCH: q1 SEARCH: q2 same line", true, "q1 SEARCH: q2 same line"},
    {"SEARCH: with crlf\r\nrest", true, "with crlf"},
    {"Multi\nline\nSEARCH: on third line", true, "on third line"},
    {"SEARCH:a\nSEARCH: b", true, "a"},
    {"A SEARCH:compact?", true, "compact?"},
    {"SEARCH: unicode h\xC3\xA9llo w\xC3\xB6rld", true, "unicode h\xC3\xA9llo w\xC3\xB6rld"},
    {"SEARCH: tab\tinside kept", true, "tab\tinside kept"},
    {"SEARCH:\ttab after colon", false, ""},
    {"", false, ""},
    {"SEARCH", false, ""},
    {"XSEARCH:y", true, "y"},
    {"SEARCH: query with trailing period.", true, "query with trailing period."},
    {"I will SEARCH: price of oil June 2008\nThen I will analyze.", true,
     "price of oil June 2008"},
    {"SEARCH:  ", true, ""},
    {"This mentions the word search: but lowercase", false, ""},
    {"SEARCH:0", true, "0"},
    {"Final text mentions SEARCHING but not the marker", false, ""},
    {"... after analysis. SEARCH: last thing", true, "last thing"},
};

Statement test_statement() {
    Statement s;
    s.id = "st-1";
    s.text = "The price of gas doubled since 2008.";
    s.label = 0;
    return s;
}

BackendSpec mock_backend(const std::filesystem::path& script) {
    BackendSpec b;
    b.kind = BackendKind::scripted_mock;
    b.script = script.string();
    b.model = "mock";
    return b;
}

}  // namespace

TEST_CASE("parse_search_directive golden set") {
    int checked = 0;
    for (const auto& c : kDirectiveCases) {
        auto got = parse_search_directive(c.text);
        INFO("input: ", c.text);
        CHECK(got.has_value() == c.present);
        if (c.present && got) CHECK(*got == c.expected);
        ++checked;
    }
    CHECK(checked >= 31);
}

TEST_CASE("build_initial_messages offline template") {
    AgentConfig cfg;
    cfg.prompt_variant_id = "default";
    PromptLibrary prompts = PromptLibrary::builtin();
    Statement s = test_statement();
    auto messages = build_initial_messages(s, cfg, prompts);
    REQUIRE(messages.size() == 1);
    CHECK(messages[0].role == Role::user);
    CHECK(messages[0].content.find(s.text) != std::string::npos);
    CHECK(messages[0].content.find("begin your summary with the phrase \"Summary: \"") !=
          std::string::npos);
    CHECK(messages[0].content.find("search engine tool") == std::string::npos);
}

TEST_CASE("build_initial_messages search template") {
    AgentConfig cfg;
    cfg.search = SearchConfig{};
    PromptLibrary prompts = PromptLibrary::builtin();
    auto messages = build_initial_messages(test_statement(), cfg, prompts);
    REQUIRE(messages.size() == 1);
    CHECK(messages[0].content.find("You may invoke the search tool as many times as needed") !=
          std::string::npos);
    CHECK(messages[0].content.find("begin your query with the phrase \"SEARCH: \"") !=
          std::string::npos);
}

TEST_CASE("build_initial_messages paraphrase variants") {
    AgentConfig cfg;
    cfg.prompt_variant_id = "paraphrase-2";
    PromptLibrary prompts = PromptLibrary::builtin();
    auto messages = build_initial_messages(test_statement(), cfg, prompts);
    CHECK(messages[0].content.find("Your job is to evaluate the accuracy of the provided statement") !=
          std::string::npos);
    CHECK(messages[0].content.find("Summary: True statement; Factuality: 1") != std::string::npos);

    cfg.prompt_variant_id = "nonexistent-variant";
    CHECK_THROWS_AS(build_initial_messages(test_statement(), cfg, prompts), ConfigError);
}

TEST_CASE("templates directory mirrors the builtin set") {
    PromptLibrary from_dir;
    from_dir.load_directory(std::filesystem::path(FACTSEARCH_REPO_ROOT) / "templates");
    const PromptLibrary builtin = PromptLibrary::builtin();
    CHECK(from_dir.all() == builtin.all());
}

TEST_CASE("run_agent one directive then final verdict") {
    fstest::TempDir tmp;
    nlohmann::json script = nlohmann::json::array();
    script.push_back({{"match", {{"substring", "Search result:"}}},
                      {"response", "Summary: verified. True statement; Factuality: 1."}});
    script.push_back(
        {{"match", {{"substring", "Statement:"}}},
         {"response", "Analysis first. SEARCH: Historical price of oil in June 2008"}});
    fstest::write_text(tmp.file("gen.json"), script.dump());

    nlohmann::json search;
    search["Historical price of oil in June 2008"] = "Oil peaked at $126.33 in June 2008.";
    fstest::write_text(tmp.file("search.json"), search.dump());

    AgentConfig cfg;
    cfg.generator = mock_backend(tmp.file("gen.json"));
    SearchConfig search_cfg;
    search_cfg.backend_kind = SearchBackendKind::mock;
    search_cfg.mock_fixture = tmp.file("search.json").string();
    cfg.search = search_cfg;

    ChatGateway gateway;
    PromptLibrary prompts = PromptLibrary::builtin();
    Transcript t = run_agent(test_statement(), cfg, gateway, prompts);

    CHECK(t.terminated_by == Termination::final_answer);
    REQUIRE(t.search_events.size() == 1);
    CHECK(t.search_events[0].ordinal == 1);
    CHECK(t.search_events[0].query.text == "Historical price of oil in June 2008");
    CHECK(t.final_text.find("Factuality: 1") != std::string::npos);

    // turns: task prompt, directive, search result, final
    REQUIRE(t.turns.size() == 4);
    CHECK(t.turns[0].role == Role::user);
    CHECK(t.turns[1].role == Role::assistant);
    CHECK(t.turns[2].role == Role::user);
    CHECK(t.turns[2].content.rfind("Search result: ", 0) == 0);
    CHECK(t.turns[2].content.find("Oil peaked") != std::string::npos);
    CHECK(t.turns[3].role == Role::assistant);
}

TEST_CASE("run_agent offline mode performs no searches") {
    fstest::TempDir tmp;
    nlohmann::json script = nlohmann::json::array();
    script.push_back({{"match", {{"substring", ""}}},
                      {"response", "Summary: no need. False statement; Factuality: 0."}});
    fstest::write_text(tmp.file("gen.json"), script.dump());

    AgentConfig cfg;
    cfg.generator = mock_backend(tmp.file("gen.json"));

    ChatGateway gateway;
    PromptLibrary prompts = PromptLibrary::builtin();
    Transcript t = run_agent(test_statement(), cfg, gateway, prompts);
    CHECK(t.search_events.empty());
    CHECK(t.terminated_by == Termination::final_answer);
    CHECK(t.turns.size() == 2);
}

TEST_CASE("run_agent ignores directives when search is not configured") {
    fstest::TempDir tmp;
    nlohmann::json script = nlohmann::json::array();
    script.push_back({{"match", {{"substring", ""}}}, {"response", "SEARCH: anything"}});
    fstest::write_text(tmp.file("gen.json"), script.dump());
    AgentConfig cfg;
    cfg.generator = mock_backend(tmp.file("gen.json"));
    ChatGateway gateway;
    PromptLibrary prompts = PromptLibrary::builtin();
    Transcript t = run_agent(test_statement(), cfg, gateway, prompts);
    CHECK(t.search_events.empty());
    CHECK(t.terminated_by == Termination::final_answer);
}

namespace {

// generator that always wants another search, unless told to finalize
AgentConfig always_search_config(fstest::TempDir& tmp, int max_searches) {
    nlohmann::json script = nlohmann::json::array();
    script.push_back({{"match", {{"substring", "provide your final answer"}}},
                      {"response", "Fine. Summary: undecided either way."}});
    script.push_back({{"match", {{"substring", ""}}}, {"response", "Thinking. SEARCH: again"}});
    fstest::write_text(tmp.file("gen.json"), script.dump());
    nlohmann::json search;
    search["again"] = "same evidence as before";
    fstest::write_text(tmp.file("search.json"), search.dump());

    AgentConfig cfg;
    cfg.generator = mock_backend(tmp.file("gen.json"));
    SearchConfig sc;
    sc.backend_kind = SearchBackendKind::mock;
    sc.mock_fixture = tmp.file("search.json").string();
    cfg.search = sc;
    cfg.max_searches = max_searches;
    return cfg;
}

}  // namespace

TEST_CASE("run_agent enforces the search budget exactly") {
    for (int budget : {0, 1, 2, 10}) {
        fstest::TempDir tmp;
        AgentConfig cfg = always_search_config(tmp, budget);
        ChatGateway gateway;
        int generator_calls = 0;
        gateway.set_request_observer([&](const ChatRequest&) { ++generator_calls; });
        PromptLibrary prompts = PromptLibrary::builtin();
        Transcript t = run_agent(test_statement(), cfg, gateway, prompts);
        INFO("budget: ", budget);
        CHECK(static_cast<int>(t.search_events.size()) == budget);
        CHECK(t.terminated_by == Termination::budget_exhausted);
        CHECK(generator_calls == budget + 2);  // hard cap honored
        // the forced-finalization turn is present verbatim
        bool found = false;
        for (const auto& m : t.turns)
            if (m.role == Role::user && m.content == kBudgetExhaustedMessage) found = true;
        CHECK(found);
    }
}

TEST_CASE("run_agent turn roles strictly alternate after the task prompt") {
    fstest::TempDir tmp;
    AgentConfig cfg = always_search_config(tmp, 4);
    ChatGateway gateway;
    PromptLibrary prompts = PromptLibrary::builtin();
    Transcript t = run_agent(test_statement(), cfg, gateway, prompts);
    REQUIRE(t.turns.size() >= 2);
    CHECK(t.turns[0].role == Role::user);
    for (size_t i = 1; i < t.turns.size(); ++i) {
        Role expected = (i % 2 == 1) ? Role::assistant : Role::user;
        CHECK(t.turns[i].role == expected);
    }
    // ordinals strictly increasing from 1
    for (size_t i = 0; i < t.search_events.size(); ++i)
        CHECK(t.search_events[i].ordinal == static_cast<int>(i) + 1);
}

TEST_CASE("run_agent is a pure function of statement, config and fixtures") {
    fstest::TempDir tmp;
    AgentConfig cfg = always_search_config(tmp, 3);
    PromptLibrary prompts = PromptLibrary::builtin();
    auto run_once = [&] {
        ChatGateway gateway;
        return run_agent(test_statement(), cfg, gateway, prompts);
    };
    Transcript a = run_once();
    Transcript b = run_once();
    CHECK(transcript_to_json(a, "r", "h", 1) == transcript_to_json(b, "r", "h", 1));
}

TEST_CASE("run_agent search payloads never carry the statement") {
    fstest::TempDir tmp;
    // cohere-style backend so every search goes through the gateway
    nlohmann::json gen = nlohmann::json::array();
    gen.push_back({{"match", {{"substring", "Search result:"}}},
                   {"response", "Summary: fine. True statement; Factuality: 1."}});
    gen.push_back({{"match", {{"substring", ""}}}, {"response", "SEARCH: oil price history"}});
    fstest::write_text(tmp.file("gen.json"), gen.dump());
    nlohmann::json rag = nlohmann::json::array();
    rag.push_back({{"match", {{"substring", "Look up info"}}}, {"response", "rag evidence"}});
    fstest::write_text(tmp.file("rag.json"), rag.dump());

    AgentConfig cfg;
    cfg.generator = mock_backend(tmp.file("gen.json"));
    SearchConfig sc;
    sc.backend_kind = SearchBackendKind::cohere_style_rag;
    sc.rag = mock_backend(tmp.file("rag.json"));
    cfg.search = sc;

    Statement s = test_statement();
    ChatGateway gateway;
    std::vector<ChatRequest> rag_requests;
    gateway.set_request_observer([&](const ChatRequest& r) {
        if (!r.messages.empty() && r.messages[0].content.rfind("Look up info", 0) == 0)
            rag_requests.push_back(r);
    });
    PromptLibrary prompts = PromptLibrary::builtin();
    Transcript t = run_agent(s, cfg, gateway, prompts);
    REQUIRE(t.search_events.size() == 1);
    REQUIRE(rag_requests.size() == 1);
    for (const auto& m : rag_requests[0].messages) {
        CHECK(m.content.find(s.text) == std::string::npos);
        CHECK(m.content.find(s.id) == std::string::npos);
    }
}

TEST_CASE("run_agent preserves partial turns on backend errors") {
    fstest::TempDir tmp;
    nlohmann::json gen = nlohmann::json::array();
    gen.push_back({{"match", {{"substring", ""}}}, {"response", "SEARCH: doomed query"}});
    fstest::write_text(tmp.file("gen.json"), gen.dump());
    nlohmann::json search;  // no entry for "doomed query" and no default
    search["other"] = "x";
    fstest::write_text(tmp.file("search.json"), search.dump());

    AgentConfig cfg;
    cfg.generator = mock_backend(tmp.file("gen.json"));
    SearchConfig sc;
    sc.backend_kind = SearchBackendKind::mock;
    sc.mock_fixture = tmp.file("search.json").string();
    cfg.search = sc;

    ChatGateway gateway;
    PromptLibrary prompts = PromptLibrary::builtin();
    Transcript t = run_agent(test_statement(), cfg, gateway, prompts);
    CHECK(t.terminated_by == Termination::backend_error);
    CHECK(t.error.find("doomed query") != std::string::npos);
    CHECK(t.turns.size() >= 1);
    CHECK(t.final_text.empty());
}

TEST_CASE("transcript json round trip") {
    fstest::TempDir tmp;
    AgentConfig cfg = always_search_config(tmp, 2);
    ChatGateway gateway;
    PromptLibrary prompts = PromptLibrary::builtin();
    Transcript t = run_agent(test_statement(), cfg, gateway, prompts);
    Transcript back = transcript_from_json(transcript_to_json(t, "run-x", "hash-y", 3));
    CHECK(back.statement_id == t.statement_id);
    CHECK(back.terminated_by == t.terminated_by);
    CHECK(back.turns.size() == t.turns.size());
    CHECK(back.search_events.size() == t.search_events.size());
    CHECK(back.final_text == t.final_text);
}
