#include "factsearch/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "factsearch/domains.hpp"
#include "factsearch/errors.hpp"
#include "factsearch/util.hpp"

namespace factsearch {

namespace {

RetryPolicy retry_from_json(const nlohmann::json& j) {
    RetryPolicy p;
    p.max_attempts = j.value("max_attempts", p.max_attempts);
    p.backoff_initial_ms = j.value("backoff_initial_ms", p.backoff_initial_ms);
    return p;
}

RateLimit limit_from_json(const nlohmann::json& j) {
    RateLimit l;
    l.max_in_flight = j.value("max_in_flight", l.max_in_flight);
    l.requests_per_window = j.value("requests_per_window", l.requests_per_window);
    l.window_ms = j.value("window_ms", l.window_ms);
    return l;
}

}  // namespace

BackendSpec backend_from_json(const nlohmann::json& j) {
    BackendSpec spec;
    std::string kind = j.value("kind", "scripted-mock");
    if (kind == "remote-http") spec.kind = BackendKind::remote_http;
    else if (kind == "scripted-mock") spec.kind = BackendKind::scripted_mock;
    else throw ConfigError("unknown backend kind: \"" + kind + "\"");
    spec.endpoint = j.value("endpoint", "");
    spec.credential_env = j.value("credential_env", "");
    spec.script = j.value("script", "");
    spec.model = j.value("model", "");
    if (j.contains("retry")) spec.retry = retry_from_json(j["retry"]);
    if (j.contains("rate_limit")) spec.limit = limit_from_json(j["rate_limit"]);
    spec.timeout_ms = j.value("timeout_ms", spec.timeout_ms);
    if (spec.kind == BackendKind::remote_http && spec.endpoint.empty())
        throw ConfigError("remote-http backend needs an endpoint");
    if (spec.kind == BackendKind::scripted_mock && spec.script.empty())
        throw ConfigError("scripted-mock backend needs a script");
    return spec;
}

nlohmann::json backend_to_json(const BackendSpec& spec) {
    nlohmann::json j;
    j["kind"] = spec.kind == BackendKind::remote_http ? "remote-http" : "scripted-mock";
    if (!spec.endpoint.empty()) j["endpoint"] = spec.endpoint;
    if (!spec.credential_env.empty()) j["credential_env"] = spec.credential_env;
    if (!spec.script.empty()) j["script"] = spec.script;
    if (!spec.model.empty()) j["model"] = spec.model;
    j["retry"] = {{"max_attempts", spec.retry.max_attempts},
                  {"backoff_initial_ms", spec.retry.backoff_initial_ms}};
    j["rate_limit"] = {{"max_in_flight", spec.limit.max_in_flight},
                       {"requests_per_window", spec.limit.requests_per_window},
                       {"window_ms", spec.limit.window_ms}};
    j["timeout_ms"] = spec.timeout_ms;
    return j;
}

namespace {

SearchConfig search_from_json(const nlohmann::json& j) {
    SearchConfig cfg;
    cfg.backend_kind = parse_search_backend_kind(j.value("backend_kind", "mock"));
    cfg.k = j.value("k", cfg.k);
    for (const auto& d : j.value("blocked_domains", nlohmann::json::array()))
        cfg.blocked_domains.insert(normalize_domain(d.get<std::string>()));
    cfg.per_result_char_cap = j.value("per_result_char_cap", cfg.per_result_char_cap);
    if (j.contains("summarizer")) cfg.summarizer = backend_from_json(j["summarizer"]);
    if (j.contains("provider")) cfg.provider = backend_from_json(j["provider"]);
    if (j.contains("rag")) cfg.rag = backend_from_json(j["rag"]);
    cfg.mock_fixture = j.value("mock_fixture", "");
    cfg.kb_path = j.value("kb_path", "");
    if (j.contains("embedder")) cfg.embedder = backend_from_json(j["embedder"]);
    cfg.embed_model = j.value("embed_model", "");
    return cfg;
}

nlohmann::json search_to_json(const SearchConfig& cfg) {
    nlohmann::json j;
    j["backend_kind"] = to_string(cfg.backend_kind);
    j["k"] = cfg.k;
    j["blocked_domains"] = cfg.blocked_domains;
    j["per_result_char_cap"] = cfg.per_result_char_cap;
    if (cfg.backend_kind == SearchBackendKind::web_summarized ||
        cfg.backend_kind == SearchBackendKind::local_kb)
        j["summarizer"] = backend_to_json(cfg.summarizer);
    if (cfg.backend_kind == SearchBackendKind::web_summarized)
        j["provider"] = backend_to_json(cfg.provider);
    if (cfg.backend_kind == SearchBackendKind::cohere_style_rag)
        j["rag"] = backend_to_json(cfg.rag);
    if (!cfg.mock_fixture.empty()) j["mock_fixture"] = cfg.mock_fixture;
    if (!cfg.kb_path.empty()) j["kb_path"] = cfg.kb_path;
    if (cfg.backend_kind == SearchBackendKind::local_kb) {
        j["embedder"] = backend_to_json(cfg.embedder);
        if (!cfg.embed_model.empty()) j["embed_model"] = cfg.embed_model;
    }
    return j;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.run_id = j.value("run_id", "");
    cfg.output_dir = j.value("output_dir", "runs");
    const auto& corpus = j.at("corpus");
    cfg.corpus_path = corpus.at("path").get<std::string>();
    if (corpus.contains("format")) {
        std::string f = corpus["format"].get<std::string>();
        if (f == "jsonl") cfg.corpus_format = CorpusFormat::jsonl;
        else if (f == "csv") cfg.corpus_format = CorpusFormat::csv;
        else throw ConfigError("unknown corpus format: \"" + f + "\"");
    } else if (cfg.corpus_path.extension() == ".csv") {
        cfg.corpus_format = CorpusFormat::csv;
    }
    if (corpus.contains("sample_n") && !corpus["sample_n"].is_null())
        cfg.sample_n = corpus["sample_n"].get<size_t>();
    cfg.sample_seed = corpus.value("sample_seed", 0ULL);

    const auto& agent = j.at("agent");
    cfg.agent.generator = backend_from_json(agent.at("generator"));
    cfg.agent.max_searches = agent.value("max_searches", cfg.agent.max_searches);
    cfg.agent.prompt_variant_id = agent.value("prompt_variant", "default");
    cfg.agent.temperature = agent.value("temperature", 1.0);
    if (agent.contains("max_output_tokens") && !agent["max_output_tokens"].is_null())
        cfg.agent.max_output_tokens = agent["max_output_tokens"].get<int>();
    if (agent.contains("search") && !agent["search"].is_null())
        cfg.agent.search = search_from_json(agent["search"]);

    if (j.contains("confidence") && !j["confidence"].is_null()) {
        const auto& c = j["confidence"];
        cfg.confidence.enabled = c.value("enabled", true);
        if (cfg.confidence.enabled) {
            cfg.confidence.scorer = backend_from_json(c.at("scorer"));
            cfg.confidence.variant =
                parse_confidence_variant(c.value("variant", "analysis-uncertainty"));
        }
    }
    cfg.trials = j.value("trials", cfg.trials);
    cfg.workers = j.value("workers", cfg.workers);
    if (j.contains("cache")) {
        const auto& c = j["cache"];
        if (c.is_boolean()) {
            cfg.cache_enabled = c.get<bool>();
        } else {
            cfg.cache_enabled = c.value("enabled", true);
            cfg.cache_dir = c.value("dir", "");
        }
    }
    cfg.templates_dir = j.value("templates_dir", "");
    cfg.ece_bins = j.value("ece_bins", cfg.ece_bins);
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid config " + path.string() + ": " + e.what());
    } catch (const FormatError& e) {
        throw ConfigError(e.what());
    }
    try {
        return from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid config " + path.string() + ": " + e.what());
    }
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["run_id"] = run_id;
    j["output_dir"] = output_dir.string();
    j["corpus"] = {{"path", corpus_path.string()},
                   {"format", corpus_format == CorpusFormat::csv ? "csv" : "jsonl"}};
    if (sample_n) j["corpus"]["sample_n"] = *sample_n;
    j["corpus"]["sample_seed"] = sample_seed;
    j["agent"]["generator"] = backend_to_json(agent.generator);
    j["agent"]["max_searches"] = agent.max_searches;
    j["agent"]["prompt_variant"] = agent.prompt_variant_id;
    j["agent"]["temperature"] = agent.temperature;
    if (agent.max_output_tokens) j["agent"]["max_output_tokens"] = *agent.max_output_tokens;
    if (agent.search) j["agent"]["search"] = search_to_json(*agent.search);
    if (confidence.enabled) {
        j["confidence"] = {{"enabled", true},
                           {"scorer", backend_to_json(confidence.scorer)},
                           {"variant", to_string(confidence.variant)}};
    }
    j["trials"] = trials;
    j["workers"] = workers;
    if (cache_enabled) j["cache"] = {{"enabled", true}, {"dir", cache_dir.string()}};
    if (!templates_dir.empty()) j["templates_dir"] = templates_dir;
    j["ece_bins"] = ece_bins;
    return j;
}

std::string ExperimentConfig::config_hash() const {
    // workers and output location do not change what gets computed
    nlohmann::json j = to_json();
    j.erase("workers");
    j.erase("output_dir");
    if (j.contains("cache")) j.erase("cache");
    return sha256_hex(j.dump());
}

void ExperimentConfig::validate() const {
    if (run_id.empty()) throw ConfigError("run_id must be set");
    for (char c : run_id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'))
            throw ConfigError("run_id may only contain [A-Za-z0-9._-]: \"" + run_id + "\"");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (agent.max_searches < 0) throw ConfigError("max_searches must be >= 0");
    if (agent.temperature < 0) throw ConfigError("temperature must be >= 0");
    if (ece_bins < 1) throw ConfigError("ece_bins must be >= 1");
    if (corpus_path.empty()) throw ConfigError("corpus.path must be set");
    if (agent.search && agent.search->k < 1) throw ConfigError("search.k must be >= 1");
}

RunPaths RunPaths::for_run(const std::filesystem::path& output_dir, const std::string& run_id) {
    RunPaths p;
    p.run_dir = output_dir / run_id;
    p.config_file = p.run_dir / "config.json";
    p.manifest_file = p.run_dir / "manifest.jsonl";
    p.records_file = p.run_dir / "records.jsonl";
    p.transcripts_dir = p.run_dir / "transcripts";
    p.report_dir = p.run_dir / "report";
    return p;
}

RunManifest RunManifest::read(const std::filesystem::path& manifest_file) {
    RunManifest manifest;
    std::ifstream in(manifest_file);
    if (!in) return manifest;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            continue;  // torn tail line from an interrupted append
        }
        std::string type = j.value("type", "");
        if (type == "run") {
            manifest.run_id = j.value("run_id", "");
            manifest.config_hash = j.value("config_hash", "");
        } else if (type == "task" && j.value("status", "") == "done") {
            manifest.completed.emplace(j.at("statement_id").get<std::string>(),
                                       j.at("trial").get<int>());
        }
    }
    return manifest;
}

std::string trial_record_to_json(const TrialRecord& r, const std::string& run_id,
                                 const std::string& config_hash, Termination terminated_by) {
    nlohmann::json j;
    j["run_id"] = run_id;
    j["config_hash"] = config_hash;
    j["statement_id"] = r.statement_id;
    j["trial"] = r.trial_index;
    j["label"] = r.label;
    j["parsable"] = r.verdict.parsable;
    if (r.verdict.parsable) {
        j["prediction"] = *r.verdict.prediction;
        if (r.verdict.matched_text) j["matched_text"] = *r.verdict.matched_text;
        j["source_turn"] = r.verdict.source_turn;
    } else {
        j["prediction"] = nullptr;
    }
    j["n_searches"] = r.n_searches;
    j["terminated_by"] = to_string(terminated_by);
    if (r.confidence) {
        j["confidence"] = {{"value", r.confidence->value},
                           {"variant", to_string(r.confidence->prompt_variant)},
                           {"raw_reply", r.confidence->raw_reply}};
    } else {
        j["confidence"] = nullptr;
        if (r.confidence_failed) j["confidence_failed"] = true;
    }
    return j.dump();
}

TrialRecord trial_record_from_json(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    TrialRecord r;
    r.statement_id = j.at("statement_id").get<std::string>();
    r.trial_index = j.at("trial").get<int>();
    r.label = j.at("label").get<int>();
    r.verdict.parsable = j.value("parsable", false);
    if (r.verdict.parsable && j.contains("prediction") && !j["prediction"].is_null()) {
        r.verdict.prediction = j["prediction"].get<int>();
        if (j.contains("matched_text")) r.verdict.matched_text = j["matched_text"].get<std::string>();
        r.verdict.source_turn = j.value("source_turn", -1);
    } else {
        r.verdict.parsable = false;
    }
    r.n_searches = j.value("n_searches", 0);
    if (j.contains("confidence") && !j["confidence"].is_null()) {
        const auto& c = j["confidence"];
        ConfidenceScore score;
        score.value = c.at("value").get<int>();
        score.prompt_variant = parse_confidence_variant(c.value("variant", "analysis-uncertainty"));
        score.raw_reply = c.value("raw_reply", "");
        r.confidence = score;
    }
    r.confidence_failed = j.value("confidence_failed", false);
    return r;
}

namespace {

std::string safe_file_stem(const std::string& id) {
    std::string safe;
    bool changed = false;
    for (char c : id) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') {
            safe += c;
        } else {
            safe += '_';
            changed = true;
        }
    }
    if (changed || safe.empty()) safe += "_" + sha256_hex(id).substr(0, 8);
    return safe;
}

Corpus load_configured_corpus(const ExperimentConfig& cfg) {
    Corpus corpus = load_corpus(cfg.corpus_path, cfg.corpus_format);
    if (cfg.sample_n) return subsample(corpus, *cfg.sample_n, cfg.sample_seed);
    return corpus;
}

PromptLibrary load_prompts(const ExperimentConfig& cfg) {
    PromptLibrary prompts = PromptLibrary::builtin();
    if (!cfg.templates_dir.empty()) prompts.load_directory(cfg.templates_dir);
    return prompts;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, bool force) {
    cfg.validate();
    PromptLibrary prompts = load_prompts(cfg);
    // fail fast on unknown prompt variants
    prompts.variant(cfg.agent.prompt_variant_id, cfg.agent.search.has_value());
    Corpus corpus = load_configured_corpus(cfg);

    RunPaths paths = RunPaths::for_run(cfg.output_dir, cfg.run_id);
    std::filesystem::create_directories(paths.transcripts_dir);
    const std::string hash = cfg.config_hash();

    if (std::filesystem::exists(paths.config_file)) {
        auto previous = ExperimentConfig::from_json(nlohmann::json::parse(read_file(paths.config_file)));
        if (previous.config_hash() != hash && !force)
            throw ConfigError("run \"" + cfg.run_id +
                              "\" exists with a different config; use --force to override");
    } else {
        write_file_atomic(paths.config_file, cfg.to_json().dump(2));
    }

    RunManifest manifest = RunManifest::read(paths.manifest_file);
    if (manifest.run_id.empty()) {
        nlohmann::json header = {{"type", "run"},
                                 {"run_id", cfg.run_id},
                                 {"config_hash", hash},
                                 {"created", iso8601_now()}};
        append_line(paths.manifest_file, header.dump());
        manifest.run_id = cfg.run_id;
        manifest.config_hash = hash;
    }

    struct Task {
        const Statement* statement;
        int trial;
    };
    std::vector<Task> tasks;
    for (const auto& s : corpus.statements)
        for (int t = 1; t <= cfg.trials; ++t)
            if (!manifest.completed.count({s.id, t})) tasks.push_back({&s, t});

    RunResult result;
    result.expected_tasks = corpus.size() * static_cast<size_t>(cfg.trials);
    result.skipped = manifest.completed.size();

    ChatGateway gateway = cfg.cache_enabled
                              ? ChatGateway(cfg.cache_dir.empty() ? paths.run_dir / "cache"
                                                                  : cfg.cache_dir)
                              : ChatGateway();

    std::mutex io_mutex;
    std::atomic<size_t> next{0};
    std::atomic<size_t> backend_errors{0};
    std::vector<std::string> fatal_errors;
    std::mutex fatal_mutex;

    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            try {
                CompleteOptions generator_options;
                generator_options.cache_salt = "trial-" + std::to_string(task.trial);
                Transcript transcript =
                    run_agent(*task.statement, cfg.agent, gateway, prompts, generator_options);
                TrialRecord record;
                record.statement_id = task.statement->id;
                record.trial_index = task.trial;
                record.label = task.statement->label;
                record.n_searches = static_cast<int>(transcript.search_events.size());
                record.verdict = extract_prediction(transcript.final_text);
                if (record.verdict.parsable)
                    record.verdict.source_turn = static_cast<int>(transcript.turns.size()) - 1;
                if (cfg.confidence.enabled && !transcript.final_text.empty()) {
                    auto score = elicit_confidence(task.statement->text, transcript.final_text,
                                                   cfg.confidence.scorer, gateway, prompts);
                    if (score) record.confidence = *score;
                    else record.confidence_failed = true;
                }
                if (transcript.terminated_by == Termination::backend_error)
                    backend_errors.fetch_add(1);

                std::string transcript_json =
                    transcript_to_json(transcript, cfg.run_id, hash, task.trial);
                std::string record_json =
                    trial_record_to_json(record, cfg.run_id, hash, transcript.terminated_by);
                nlohmann::json task_line = {{"type", "task"},
                                            {"statement_id", task.statement->id},
                                            {"trial", task.trial},
                                            {"status", "done"},
                                            {"ts", iso8601_now()}};
                {
                    std::lock_guard lock(io_mutex);
                    write_file_atomic(paths.transcripts_dir /
                                          (safe_file_stem(task.statement->id) + "__t" +
                                           std::to_string(task.trial) + ".json"),
                                      transcript_json);
                    append_line(paths.records_file, record_json);
                    append_line(paths.manifest_file, task_line.dump());
                }
            } catch (const std::exception& e) {
                std::lock_guard lock(fatal_mutex);
                fatal_errors.push_back(std::string(e.what()));
            }
        }
    };

    std::vector<std::thread> threads;
    int n_threads = std::min<int>(cfg.workers, static_cast<int>(tasks.size()));
    for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    if (!fatal_errors.empty())
        throw Error("experiment failed: " + fatal_errors.front() +
                    (fatal_errors.size() > 1
                         ? " (+" + std::to_string(fatal_errors.size() - 1) + " more)"
                         : ""));

    result.executed = tasks.size();
    result.backend_errors = backend_errors.load();
    result.manifest = RunManifest::read(paths.manifest_file);

    // reload the full record set (resumed + fresh)
    std::ifstream in(paths.records_file);
    std::map<std::pair<std::string, int>, TrialRecord> unique;
    std::string line;
    while (in && std::getline(in, line)) {
        if (trim(line).empty()) continue;
        TrialRecord r = trial_record_from_json(line);
        unique[{r.statement_id, r.trial_index}] = r;  // last write wins
    }
    for (auto& [key, r] : unique) result.records.push_back(std::move(r));
    return result;
}

LoadedRun load_run(const std::filesystem::path& output_dir, const std::string& run_id,
                   bool force_mixed_hash) {
    RunPaths paths = RunPaths::for_run(output_dir, run_id);
    if (!std::filesystem::exists(paths.config_file))
        throw ConfigError("run not found: " + run_id + " (no " + paths.config_file.string() + ")");
    LoadedRun run;
    run.config_json = nlohmann::json::parse(read_file(paths.config_file));
    run.config = ExperimentConfig::from_json(run.config_json);
    run.config_hash = run.config.config_hash();
    run.manifest = RunManifest::read(paths.manifest_file);

    std::ifstream in(paths.records_file);
    std::map<std::pair<std::string, int>, TrialRecord> unique;
    std::string line;
    size_t line_no = 0;
    while (in && std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        std::string hash = j.value("config_hash", "");
        if (hash != run.config_hash && !force_mixed_hash)
            throw ConfigError("run " + run_id + " records line " + std::to_string(line_no) +
                              " carries config hash " + hash.substr(0, 12) +
                              " but the run config hashes to " + run.config_hash.substr(0, 12) +
                              "; pass force to mix");
        TrialRecord r = trial_record_from_json(line);
        unique[{r.statement_id, r.trial_index}] = r;
    }
    for (auto& [key, r] : unique) run.records.push_back(std::move(r));

    Corpus corpus = load_corpus(run.config.corpus_path, run.config.corpus_format);
    size_t n_statements = run.config.sample_n ? *run.config.sample_n : corpus.size();
    run.expected_tasks = n_statements * static_cast<size_t>(run.config.trials);
    run.partial = run.records.size() < run.expected_tasks;
    return run;
}

std::vector<Transcript> load_transcripts(const std::filesystem::path& output_dir,
                                         const std::string& run_id) {
    RunPaths paths = RunPaths::for_run(output_dir, run_id);
    std::vector<Transcript> transcripts;
    if (!std::filesystem::is_directory(paths.transcripts_dir)) return transcripts;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(paths.transcripts_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) transcripts.push_back(transcript_from_json(read_file(f)));
    return transcripts;
}

std::string verify_statement(const std::string& text, const ExperimentConfig& cfg) {
    PromptLibrary prompts = load_prompts(cfg);
    ChatGateway gateway = cfg.cache_enabled && !cfg.cache_dir.empty() ? ChatGateway(cfg.cache_dir)
                                                                      : ChatGateway();
    Statement statement;
    statement.id = "adhoc";
    statement.text = text;
    Transcript transcript = run_agent(statement, cfg.agent, gateway, prompts);

    std::ostringstream out;
    out << "Statement: " << text << "\n";
    out << "Mode: " << (cfg.agent.search ? "search-enabled" : "offline") << "\n";
    out << "Searches performed: " << transcript.search_events.size() << "\n";
    for (const auto& e : transcript.search_events) {
        out << "  [" << e.ordinal << "] query: " << e.query.text << "\n";
        for (const auto& r : e.summary.results_used)
            out << "      source " << r.rank << ": " << r.url << "\n";
        for (const auto& c : e.summary.chunks_used) out << "      chunk: " << c << "\n";
    }
    out << "Termination: " << to_string(transcript.terminated_by) << "\n";
    if (transcript.terminated_by == Termination::budget_exhausted)
        out << "Note: search budget exhausted; final answer was forced.\n";
    if (transcript.terminated_by == Termination::backend_error)
        out << "Backend error: " << transcript.error << "\n";
    if (!transcript.final_text.empty()) out << "Analysis:\n" << transcript.final_text << "\n";

    Verdict verdict = extract_prediction(transcript.final_text);
    if (verdict.parsable)
        out << "Verdict: " << (*verdict.prediction == 1 ? "True statement; Factuality: 1"
                                                        : "False statement; Factuality: 0")
            << "\n";
    else
        out << "Verdict: unparsable\n";

    if (cfg.confidence.enabled && !transcript.final_text.empty()) {
        auto score = elicit_confidence(statement.text, transcript.final_text, cfg.confidence.scorer,
                                       gateway, prompts);
        if (score) out << "Confidence: " << score->value << "/100\n";
        else out << "Confidence: elicitation failed\n";
    }
    return out.str();
}

}  // namespace factsearch
