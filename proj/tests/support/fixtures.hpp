#pragma once

// Shared test scaffolding: temp directories, fixture writers, and the
// scripted 20-statement end-to-end setup used by the runner and acceptance
// suites.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "factsearch/runner.hpp"

namespace fstest {

inline std::filesystem::path unique_temp_dir() {
    static std::atomic<unsigned> counter{0};
    static const unsigned stamp = std::random_device{}();
    auto dir = std::filesystem::temp_directory_path() /
               ("factsearch-test-" + std::to_string(stamp) + "-" +
                std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir);
    return dir;
}

struct TempDir {
    std::filesystem::path path = unique_temp_dir();
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path file(const std::string& name) const { return path / name; }
};

inline void write_text(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --- scripted end-to-end fixture -------------------------------------------
//
// 20 statements, deterministic mock generator + mock search + scripted scorer:
//   s01..s06  label 1, direct verdict 1            -> correct, no search
//   s07..s10  label 1, one search then verdict 0   -> wrong, 1 search
//   s11..s12  label 0, no parseable verdict
//   s13..s20  label 0, direct verdict 0            -> correct, no search
// Scorer always replies "80".

struct E2EFixture {
    std::filesystem::path corpus;
    std::filesystem::path generator_script;
    std::filesystem::path search_fixture;
    std::filesystem::path scorer_script;

    // per-statement ground truth for oracle computations
    struct Row {
        std::string id;
        int label;
        bool parsable;
        int prediction;  // meaningful when parsable
        int searches;
    };
    std::vector<Row> rows;
};

inline std::string e2e_token(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "tkn%02de", i);
    return buf;
}

inline std::string e2e_query_token(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "qk%02de", i);
    return buf;
}

inline E2EFixture write_e2e_fixture(const std::filesystem::path& dir) {
    E2EFixture fx;
    fx.corpus = dir / "corpus.jsonl";
    fx.generator_script = dir / "generator.json";
    fx.search_fixture = dir / "search.json";
    fx.scorer_script = dir / "scorer.json";

    std::string corpus;
    nlohmann::json generator = nlohmann::json::array();
    nlohmann::json search = nlohmann::json::object();

    auto add_statement = [&](int i, int label) {
        nlohmann::json rec;
        char id[8];
        std::snprintf(id, sizeof(id), "s%02d", i);
        rec["id"] = id;
        rec["text"] = "Synthetic claim " + e2e_token(i) + " for testing.";
        rec["label"] = label;
        rec["possibility"] = (i % 3 == 0) ? "hard" : "possible";
        rec["missing_info"] = (i % 2 == 0) ? "date" : "textual-evidence";
        corpus += rec.dump() + "\n";
        return std::string(id);
    };

    for (int i = 1; i <= 20; ++i) {
        int label = i <= 10 ? 1 : 0;
        std::string id = add_statement(i, label);
        if (i <= 6) {
            generator.push_back(
                {{"match", {{"substring", e2e_token(i)}}},
                 {"response", "Summary: checks out. True statement; Factuality: 1."}});
            fx.rows.push_back({id, label, true, 1, 0});
        } else if (i <= 10) {
            // search-result turn first (first match wins), then the directive turn
            generator.push_back(
                {{"match", {{"substring", e2e_query_token(i)}}},
                 {"response", "Summary: evidence contradicts. False statement; Factuality: 0."}});
            generator.push_back(
                {{"match", {{"substring", e2e_token(i)}}},
                 {"response", "Let me check. SEARCH: lookup " + e2e_query_token(i)}});
            search["lookup " + e2e_query_token(i)] = "Evidence note " + e2e_query_token(i) + ".";
            fx.rows.push_back({id, label, true, 0, 1});
        } else if (i <= 12) {
            generator.push_back({{"match", {{"substring", e2e_token(i)}}},
                                 {"response", "I cannot determine this."}});
            fx.rows.push_back({id, label, false, -1, 0});
        } else {
            generator.push_back(
                {{"match", {{"substring", e2e_token(i)}}},
                 {"response", "Summary: clearly wrong. False statement; Factuality: 0."}});
            fx.rows.push_back({id, label, true, 0, 0});
        }
    }

    nlohmann::json scorer = nlohmann::json::array();
    scorer.push_back({{"match", {{"substring", ""}}}, {"response", "80"}});

    write_text(fx.corpus, corpus);
    write_text(fx.generator_script, generator.dump(2));
    write_text(fx.search_fixture, search.dump(2));
    write_text(fx.scorer_script, scorer.dump(2));
    return fx;
}

inline factsearch::ExperimentConfig e2e_config(const E2EFixture& fx,
                                               const std::filesystem::path& dir,
                                               const std::string& run_id, int trials = 5,
                                               int workers = 1, bool with_confidence = true) {
    factsearch::ExperimentConfig cfg;
    cfg.run_id = run_id;
    cfg.output_dir = dir / "runs";
    cfg.corpus_path = fx.corpus;
    cfg.trials = trials;
    cfg.workers = workers;
    cfg.agent.generator.kind = factsearch::BackendKind::scripted_mock;
    cfg.agent.generator.script = fx.generator_script.string();
    cfg.agent.generator.model = "mock-generator";
    factsearch::SearchConfig search;
    search.backend_kind = factsearch::SearchBackendKind::mock;
    search.mock_fixture = fx.search_fixture.string();
    cfg.agent.search = search;
    if (with_confidence) {
        cfg.confidence.enabled = true;
        cfg.confidence.scorer.kind = factsearch::BackendKind::scripted_mock;
        cfg.confidence.scorer.script = fx.scorer_script.string();
        cfg.confidence.scorer.model = "mock-scorer";
    }
    return cfg;
}

}  // namespace fstest
