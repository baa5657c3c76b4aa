#include <CLI11.hpp>

#include <iostream>

#include <nlohmann/json.hpp>

#include "factsearch/analysis.hpp"
#include "factsearch/errors.hpp"
#include "factsearch/metrics.hpp"
#include "factsearch/runner.hpp"
#include "factsearch/search.hpp"
#include "factsearch/util.hpp"

namespace fs = factsearch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRecordedFailures = 2;
constexpr int kExitFatal = 3;

int run_command(const std::string& config_path, bool force, bool require_existing) {
    fs::ExperimentConfig cfg = fs::ExperimentConfig::load(config_path);
    if (require_existing) {
        auto paths = fs::RunPaths::for_run(cfg.output_dir, cfg.run_id);
        if (!std::filesystem::exists(paths.manifest_file))
            throw fs::ConfigError("nothing to resume: run \"" + cfg.run_id + "\" has no manifest");
    }
    fs::RunResult result = fs::run_experiment(cfg, force);
    fs::MetricsReport report = fs::build_metrics_report(result.records, cfg.ece_bins);

    std::cout << "run " << cfg.run_id << ": " << result.executed << " trials executed, "
              << result.skipped << " resumed, " << result.backend_errors << " backend errors\n";
    std::cout << "parsed rate: " << report.parsed_rate << "\n";
    std::cout << "macro F1: " << report.macro_f1_mean << " (95% CI " << report.ci95.low << ".."
              << report.ci95.high << ")\n";
    for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
    return result.backend_errors > 0 ? kExitRecordedFailures : kExitOk;
}

int report_command(const std::string& output_dir, const std::vector<std::string>& run_ids,
                   const std::vector<std::string>& pair_args, bool force, bool bootstrap,
                   size_t min_group) {
    fs::ReportRequest request;
    request.output_dir = output_dir;
    request.run_ids = run_ids;
    request.force = force;
    request.bootstrap_ci = bootstrap;
    request.subgroup_min_count = min_group;
    for (const auto& p : pair_args) {
        auto colon = p.find(':');
        if (colon == std::string::npos)
            throw fs::ConfigError("--pair expects ON_RUN:OFF_RUN, got \"" + p + "\"");
        request.pairs.emplace_back(p.substr(0, colon), p.substr(colon + 1));
    }
    std::cout << fs::write_reports(request);
    return kExitOk;
}

int verify_command(const std::string& config_path, const std::string& statement) {
    fs::ExperimentConfig cfg = fs::ExperimentConfig::load(config_path);
    cfg.validate();
    std::cout << fs::verify_statement(statement, cfg);
    return kExitOk;
}

int analyze_sources_command(const std::string& output_dir, const std::string& run_id,
                            const std::string& bias_table_path,
                            const std::string& leaning_backend_path) {
    auto transcripts = fs::load_transcripts(output_dir, run_id);
    if (transcripts.empty())
        throw fs::ConfigError("run " + run_id + " has no transcripts under " + output_dir);
    fs::DomainCounts counts = fs::extract_domains(transcripts);

    auto paths = fs::RunPaths::for_run(output_dir, run_id);
    std::filesystem::create_directories(paths.report_dir);

    std::ostringstream out;
    out << "domain\tcount\tbias\tquality\n";
    std::vector<fs::SourceProfile> profiles = counts.profiles;
    std::optional<fs::BiasJoin> join;
    if (!bias_table_path.empty()) {
        fs::BiasTable table = fs::BiasTable::load_csv(bias_table_path);
        join = fs::join_bias(profiles, table);
        profiles = join->profiles;
    }
    for (const auto& p : profiles) {
        out << p.domain << "\t" << p.count << "\t";
        if (p.bias) out << *p.bias;
        out << "\t";
        if (p.quality) out << *p.quality;
        out << "\n";
    }
    fs::write_file_atomic(paths.report_dir / "sources.tsv", out.str());

    std::cout << "sources: " << profiles.size() << " domains, " << counts.skipped_urls
              << " unparseable urls skipped\n";
    size_t shown = 0;
    for (const auto& p : profiles) {
        if (shown++ == 10) break;
        std::cout << "  " << p.domain << "  " << p.count << "\n";
    }
    if (join) {
        std::cout << "bias table coverage: " << join->coverage << "\n";
        if (join->mean_bias)
            std::cout << "mean source bias (usage-weighted): " << *join->mean_bias << "\n";
        if (join->mean_bias_unweighted)
            std::cout << "mean source bias (per domain): " << *join->mean_bias_unweighted << "\n";
        if (join->mean_quality)
            std::cout << "mean source quality (usage-weighted): " << *join->mean_quality << "\n";
    }

    if (!leaning_backend_path.empty()) {
        fs::LoadedRun run = fs::load_run(output_dir, run_id, true);
        fs::Corpus corpus = fs::load_corpus(run.config.corpus_path, run.config.corpus_format);
        if (run.config.sample_n)
            corpus = fs::subsample(corpus, *run.config.sample_n, run.config.sample_seed);
        fs::BackendSpec scorer =
            fs::backend_from_json(nlohmann::json::parse(fs::read_file(leaning_backend_path)));
        fs::ChatGateway gateway = run.config.cache_enabled && !run.config.cache_dir.empty()
                                      ? fs::ChatGateway(run.config.cache_dir)
                                      : fs::ChatGateway();
        fs::PromptLibrary prompts = fs::PromptLibrary::builtin();
        std::ostringstream lean;
        lean << "statement_id\tleaning\n";
        double sum = 0;
        size_t scored = 0, failures = 0;
        for (const auto& s : corpus.statements) {
            auto score = fs::score_statement_leaning(s, scorer, gateway, prompts);
            if (score) {
                lean << s.id << "\t" << *score << "\n";
                sum += *score;
                ++scored;
            } else {
                lean << s.id << "\tfailed\n";
                ++failures;
            }
        }
        fs::write_file_atomic(paths.report_dir / "statement_leaning.tsv", lean.str());
        if (scored > 0)
            std::cout << "mean statement leaning: " << sum / static_cast<double>(scored) << " ("
                      << scored << " scored, " << failures << " failures)\n";
        else
            std::cout << "statement leaning: all " << failures << " elicitations failed\n";
    }
    return kExitOk;
}

int kb_build_command(const std::vector<std::string>& inputs, const std::string& output,
                     size_t window, size_t overlap, const std::string& embed_endpoint,
                     const std::string& embed_model, const std::string& credential_env,
                     const std::string& embed_fixture, int batch_log) {
    std::unique_ptr<fs::Embedder> embedder;
    if (!embed_fixture.empty()) {
        embedder = fs::make_fixture_embedder(embed_fixture);
    } else if (!embed_endpoint.empty()) {
        fs::BackendSpec spec;
        spec.kind = fs::BackendKind::remote_http;
        spec.endpoint = embed_endpoint;
        spec.credential_env = credential_env;
        embedder = fs::make_http_embedder(spec, embed_model);
    } else {
        throw fs::ConfigError("kb-build needs --embed-endpoint or --embed-fixture");
    }

    std::vector<fs::KbChunk> chunks;
    for (const auto& input : inputs) {
        std::string text = fs::read_file(input);
        std::string title = std::filesystem::path(input).stem().string();
        auto windows = fs::chunk_text(text, window, overlap);
        for (size_t i = 0; i < windows.size(); ++i) {
            fs::KbChunk chunk;
            chunk.chunk_id = title + "-" + std::to_string(i);
            chunk.source_title = title;
            chunk.text = windows[i];
            chunk.embedding = embedder->embed(windows[i]);
            chunks.push_back(std::move(chunk));
            if (batch_log > 0 && chunks.size() % static_cast<size_t>(batch_log) == 0)
                std::cout << "embedded " << chunks.size() << " chunks...\n";
        }
    }
    fs::KbIndex index = fs::KbIndex::from_chunks(std::move(chunks));
    index.save(output);
    std::cout << "wrote " << index.size() << " chunks (dim " << index.dimension() << ") to "
              << output << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-augmented fact checking harness"};
    app.require_subcommand(1);

    std::string config_path, statement, output_dir = "runs", run_id;
    std::string bias_table, leaning_backend;
    std::vector<std::string> run_ids, pair_args, kb_inputs;
    bool force = false, bootstrap = false;
    size_t min_group = 20;
    std::string kb_output = "kb.fskb", embed_endpoint, embed_model, credential_env, embed_fixture;
    size_t window = 1000, overlap = 200;
    int batch_log = 0;

    auto* run = app.add_subcommand("run", "Execute an experiment (resumes automatically)");
    run->add_option("--config", config_path, "Experiment config JSON")->required();
    run->add_flag("--force", force, "Proceed despite a config change under the same run_id");

    auto* resume = app.add_subcommand("resume", "Resume an interrupted experiment");
    resume->add_option("--config", config_path, "Experiment config JSON")->required();
    resume->add_flag("--force", force, "Proceed despite a config change under the same run_id");

    auto* verify = app.add_subcommand("verify", "Fact-check one ad-hoc statement");
    verify->add_option("--config", config_path, "Experiment config JSON")->required();
    verify->add_option("--statement", statement, "Statement text to verify")->required();

    auto* report = app.add_subcommand("report", "Emit metrics and comparison tables");
    report->add_option("--output-dir", output_dir, "Directory holding run folders");
    report->add_option("--run", run_ids, "Run id (repeatable)");
    report->add_option("--pair", pair_args, "ON_RUN:OFF_RUN delta pairing (repeatable)");
    report->add_flag("--force", force, "Allow records with mismatched config hashes");
    report->add_flag("--bootstrap", bootstrap, "Also emit a bootstrap CI");
    report->add_option("--min-group", min_group, "Smallest subgroup to report (default 20)");

    auto* sources = app.add_subcommand("analyze-sources", "Source domain statistics for a run");
    sources->add_option("--output-dir", output_dir, "Directory holding run folders");
    sources->add_option("--run", run_id, "Run id")->required();
    sources->add_option("--bias-table", bias_table, "CSV with domain,bias,quality columns");
    sources->add_option("--leaning-backend", leaning_backend,
                        "BackendSpec JSON for statement leaning scoring");

    auto* kb = app.add_subcommand("kb-build", "Chunk and embed text files into a vector file");
    kb->add_option("--input", kb_inputs, "Input text file (repeatable)")->required();
    kb->add_option("--output", kb_output, "Output vector file");
    kb->add_option("--window", window, "Chunk window size in characters");
    kb->add_option("--overlap", overlap, "Chunk overlap in characters");
    kb->add_option("--embed-endpoint", embed_endpoint, "Embedding endpoint URL");
    kb->add_option("--embed-model", embed_model, "Embedding model id");
    kb->add_option("--credential-env", credential_env, "Env var holding the bearer token");
    kb->add_option("--embed-fixture", embed_fixture, "JSON fixture mapping text to vectors");
    kb->add_option("--progress-every", batch_log, "Log every N embedded chunks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(config_path, force, false);
        if (resume->parsed()) return run_command(config_path, force, true);
        if (verify->parsed()) return verify_command(config_path, statement);
        if (report->parsed())
            return report_command(output_dir, run_ids, pair_args, force, bootstrap, min_group);
        if (sources->parsed())
            return analyze_sources_command(output_dir, run_id, bias_table, leaning_backend);
        if (kb->parsed())
            return kb_build_command(kb_inputs, kb_output, window, overlap, embed_endpoint,
                                    embed_model, credential_env, embed_fixture, batch_log);
    } catch (const fs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const fs::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const fs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFatal;
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return kExitFatal;
    }
    return kExitOk;
}
