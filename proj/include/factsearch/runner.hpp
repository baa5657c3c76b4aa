#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "factsearch/agent.hpp"
#include "factsearch/corpus.hpp"
#include "factsearch/metrics.hpp"

namespace factsearch {

struct ConfidenceConfig {
    bool enabled = false;
    BackendSpec scorer;
    ConfidenceVariant variant = ConfidenceVariant::analysis_uncertainty;
};

struct ExperimentConfig {
    std::string run_id;
    std::filesystem::path output_dir = "runs";
    std::filesystem::path corpus_path;
    CorpusFormat corpus_format = CorpusFormat::jsonl;
    std::optional<size_t> sample_n;
    std::uint64_t sample_seed = 0;
    AgentConfig agent;
    ConfidenceConfig confidence;
    int trials = 5;
    int workers = 1;
    bool cache_enabled = false;
    std::filesystem::path cache_dir;
    std::string templates_dir;  // optional extra prompt variants
    int ece_bins = 10;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    // SHA-256 over the canonical config serialization; stamped on every artifact.
    std::string config_hash() const;
    void validate() const;  // throws ConfigError
};

BackendSpec backend_from_json(const nlohmann::json& j);
nlohmann::json backend_to_json(const BackendSpec& spec);

struct RunPaths {
    std::filesystem::path run_dir;
    std::filesystem::path config_file;
    std::filesystem::path manifest_file;
    std::filesystem::path records_file;
    std::filesystem::path transcripts_dir;
    std::filesystem::path report_dir;

    static RunPaths for_run(const std::filesystem::path& output_dir, const std::string& run_id);
};

struct RunManifest {
    std::string run_id;
    std::string config_hash;
    std::set<std::pair<std::string, int>> completed;  // (statement_id, trial)

    static RunManifest read(const std::filesystem::path& manifest_file);
};

struct RunResult {
    RunManifest manifest;
    std::vector<TrialRecord> records;  // all records, including resumed ones
    size_t executed = 0;               // tasks run in this invocation
    size_t skipped = 0;                // tasks already completed
    size_t backend_errors = 0;         // trials that terminated with backend-error
    size_t expected_tasks = 0;
};

// Executes trials x |corpus| agent runs with at most cfg.workers in flight,
// persisting every transcript and trial record as it completes. Completed
// (statement, trial) pairs from a previous invocation are never recomputed.
// A config change under the same run_id is refused unless force is set.
RunResult run_experiment(const ExperimentConfig& cfg, bool force = false);

std::string trial_record_to_json(const TrialRecord& r, const std::string& run_id,
                                 const std::string& config_hash, Termination terminated_by);
TrialRecord trial_record_from_json(const std::string& line);

struct LoadedRun {
    ExperimentConfig config;
    nlohmann::json config_json;
    std::string config_hash;
    RunManifest manifest;
    std::vector<TrialRecord> records;  // deduplicated, last record per task wins
    size_t expected_tasks = 0;
    bool partial = false;
};

LoadedRun load_run(const std::filesystem::path& output_dir, const std::string& run_id,
                   bool force_mixed_hash = false);

std::vector<Transcript> load_transcripts(const std::filesystem::path& output_dir,
                                         const std::string& run_id);

// One agent loop on an ad-hoc statement; returns the human-readable report.
std::string verify_statement(const std::string& text, const ExperimentConfig& cfg);

struct ReportRequest {
    std::filesystem::path output_dir;
    std::vector<std::string> run_ids;
    std::vector<std::pair<std::string, std::string>> pairs;  // (search-on, search-off)
    bool force = false;
    bool bootstrap_ci = false;
    size_t subgroup_min_count = 20;
};

// Emits metrics.json/metrics.tsv per run plus delta tables for each pair
// under <run>/report/ (pair outputs under the "on" run). Returns a short
// printable summary.
std::string write_reports(const ReportRequest& request);

}  // namespace factsearch
