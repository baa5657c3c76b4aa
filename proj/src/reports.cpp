#include <fstream>
#include <iomanip>
#include <sstream>

#include "factsearch/errors.hpp"
#include "factsearch/runner.hpp"
#include "factsearch/util.hpp"

namespace factsearch {

namespace {

std::string fmt(double v) {
    std::ostringstream ss;
    ss << std::setprecision(12) << v;
    return ss.str();
}

nlohmann::json report_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["macro_f1_mean"] = r.macro_f1_mean;
    j["ci95"] = {{"low", r.ci95.low}, {"high", r.ci95.high}};
    j["per_class_f1"] = {{"class0", r.per_class.class0}, {"class1", r.per_class.class1}};
    j["parsed_rate"] = r.parsed_rate;
    if (r.ece_score) j["ece"] = *r.ece_score;
    if (r.brier_score) j["brier"] = *r.brier_score;
    j["n_records"] = r.n_records;
    j["n_scored"] = r.n_scored;
    j["per_trial_f1"] = r.per_trial_f1;
    auto bins = nlohmann::json::array();
    for (const auto& b : r.bins)
        bins.push_back({{"lo", b.lo},
                        {"hi", b.hi},
                        {"mean_conf", b.mean_conf},
                        {"accuracy", b.accuracy},
                        {"count", b.count}});
    j["reliability_bins"] = bins;
    if (r.searches.correct_mean) j["avg_searches_correct"] = *r.searches.correct_mean;
    if (r.searches.incorrect_mean) j["avg_searches_incorrect"] = *r.searches.incorrect_mean;
    j["warnings"] = r.warnings;
    return j;
}

// One row per metric and per subgroup: section <tab> key <tab> value.
void write_metrics_tsv(const std::filesystem::path& path, const MetricsReport& r,
                       const LoadedRun& run) {
    std::ostringstream out;
    out << "section\tkey\tvalue\n";
    if (run.partial)
        out << "status\tpartial\t" << run.records.size() << "/" << run.expected_tasks << "\n";
    else
        out << "status\tcomplete\t" << run.records.size() << "/" << run.expected_tasks << "\n";
    out << "f1\tmacro_mean\t" << fmt(r.macro_f1_mean) << "\n";
    out << "f1\tci95_low\t" << fmt(r.ci95.low) << "\n";
    out << "f1\tci95_high\t" << fmt(r.ci95.high) << "\n";
    out << "f1\tclass0\t" << fmt(r.per_class.class0) << "\n";
    out << "f1\tclass1\t" << fmt(r.per_class.class1) << "\n";
    for (size_t t = 0; t < r.per_trial_f1.size(); ++t)
        out << "f1\ttrial" << (t + 1) << "\t" << fmt(r.per_trial_f1[t]) << "\n";
    out << "parsing\tparsed_rate\t" << fmt(r.parsed_rate) << "\n";
    if (r.ece_score) out << "calibration\tece\t" << fmt(*r.ece_score) << "\n";
    if (r.brier_score) out << "calibration\tbrier\t" << fmt(*r.brier_score) << "\n";
    out << "calibration\tn_scored\t" << r.n_scored << "\n";
    for (size_t b = 0; b < r.bins.size(); ++b) {
        const auto& bin = r.bins[b];
        out << "reliability_bin\t" << fmt(bin.lo) << "-" << fmt(bin.hi) << "\t" << fmt(bin.mean_conf)
            << "," << fmt(bin.accuracy) << "," << bin.count << "\n";
    }
    if (r.searches.correct_mean)
        out << "usage\tavg_searches_correct\t" << fmt(*r.searches.correct_mean) << "\n";
    if (r.searches.incorrect_mean)
        out << "usage\tavg_searches_incorrect\t" << fmt(*r.searches.incorrect_mean) << "\n";
    for (const auto& w : r.warnings) out << "warning\t-\t" << w << "\n";
    write_file_atomic(path, out.str());
}

void write_reliability_tsv(const std::filesystem::path& path, const MetricsReport& r) {
    std::ostringstream out;
    out << "bin_lo\tbin_hi\tmean_conf\taccuracy\tcount\n";
    for (const auto& b : r.bins)
        out << fmt(b.lo) << "\t" << fmt(b.hi) << "\t" << fmt(b.mean_conf) << "\t" << fmt(b.accuracy)
            << "\t" << b.count << "\n";
    write_file_atomic(path, out.str());
}

void write_subgroup_tsv(const std::filesystem::path& path, const SubgroupTable& table,
                        GroupingField field) {
    std::ostringstream out;
    out << "group\tn\tf1_on\tf1_off\tdelta\n";
    for (const auto& row : table.rows)
        out << row.group << "\t" << row.n << "\t" << fmt(row.f1_on) << "\t" << fmt(row.f1_off)
            << "\t" << fmt(row.delta) << "\n";
    for (const auto& g : table.suppressed) out << g << "\tsuppressed\t-\t-\t-\n";
    if (table.skipped_missing_field > 0)
        out << "(missing " << to_string(field) << ")\t" << table.skipped_missing_field
            << "\tskipped\t-\t-\n";
    write_file_atomic(path, out.str());
}

}  // namespace

std::string write_reports(const ReportRequest& request) {
    std::vector<std::string> missing;
    for (const auto& id : request.run_ids) {
        auto paths = RunPaths::for_run(request.output_dir, id);
        if (!std::filesystem::exists(paths.config_file)) missing.push_back(id);
    }
    for (const auto& [on, off] : request.pairs) {
        for (const auto& id : {on, off}) {
            auto paths = RunPaths::for_run(request.output_dir, id);
            if (!std::filesystem::exists(paths.config_file)) missing.push_back(id);
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& id : missing) list += " " + id;
        throw ConfigError("missing runs:" + list);
    }

    std::ostringstream summary;
    std::map<std::string, LoadedRun> runs;
    auto get_run = [&](const std::string& id) -> LoadedRun& {
        auto it = runs.find(id);
        if (it == runs.end()) it = runs.emplace(id, load_run(request.output_dir, id, request.force)).first;
        return it->second;
    };

    std::set<std::string> all_ids(request.run_ids.begin(), request.run_ids.end());
    for (const auto& [on, off] : request.pairs) {
        all_ids.insert(on);
        all_ids.insert(off);
    }

    for (const auto& id : all_ids) {
        LoadedRun& run = get_run(id);
        if (run.records.empty()) throw ConfigError("run " + id + " has no records to report on");
        MetricsReport report = build_metrics_report(run.records, run.config.ece_bins);
        auto paths = RunPaths::for_run(request.output_dir, id);
        std::filesystem::create_directories(paths.report_dir);

        nlohmann::json j = report_to_json(report);
        j["run_id"] = id;
        j["config_hash"] = run.config_hash;
        j["partial"] = run.partial;
        j["completed_tasks"] = run.records.size();
        j["expected_tasks"] = run.expected_tasks;
        if (request.bootstrap_ci && report.per_trial_f1.size() >= 2) {
            Interval b = ci95_bootstrap(report.per_trial_f1, 20240501);
            j["ci95_bootstrap"] = {{"low", b.low}, {"high", b.high}};
        }
        write_file_atomic(paths.report_dir / "metrics.json", j.dump(2));
        write_metrics_tsv(paths.report_dir / "metrics.tsv", report, run);
        write_reliability_tsv(paths.report_dir / "reliability.tsv", report);

        summary << id << (run.partial ? " [partial: " + std::to_string(run.records.size()) + "/" +
                                            std::to_string(run.expected_tasks) + " trials]"
                                      : "")
                << ": macro F1 " << fmt(report.macro_f1_mean) << " (95% CI " << fmt(report.ci95.low)
                << ".." << fmt(report.ci95.high) << "), parsed " << fmt(report.parsed_rate) << "\n";
    }

    for (const auto& [on_id, off_id] : request.pairs) {
        LoadedRun& on = get_run(on_id);
        LoadedRun& off = get_run(off_id);
        MetricsReport report_on = build_metrics_report(on.records, on.config.ece_bins);
        MetricsReport report_off = build_metrics_report(off.records, off.config.ece_bins);
        auto paths = RunPaths::for_run(request.output_dir, on_id);
        std::filesystem::create_directories(paths.report_dir);
        std::string tag = on_id + "__vs__" + off_id;

        {
            std::ostringstream out;
            out << "pair\tf1_on\tci_on_low\tci_on_high\tf1_off\tci_off_low\tci_off_high\tdelta\n";
            out << tag << "\t" << fmt(report_on.macro_f1_mean) << "\t" << fmt(report_on.ci95.low)
                << "\t" << fmt(report_on.ci95.high) << "\t" << fmt(report_off.macro_f1_mean) << "\t"
                << fmt(report_off.ci95.low) << "\t" << fmt(report_off.ci95.high) << "\t"
                << fmt(report_on.macro_f1_mean - report_off.macro_f1_mean) << "\n";
            write_file_atomic(paths.report_dir / ("delta_f1__" + tag + ".tsv"), out.str());
        }

        Corpus corpus = load_corpus(on.config.corpus_path, on.config.corpus_format);
        if (on.config.sample_n) corpus = subsample(corpus, *on.config.sample_n, on.config.sample_seed);
        for (GroupingField field :
             {GroupingField::missing_info, GroupingField::possibility, GroupingField::label}) {
            SubgroupTable table = subgroup_f1_delta(on.records, off.records, corpus, field,
                                                    request.subgroup_min_count);
            write_subgroup_tsv(paths.report_dir / ("subgroup_" + to_string(field) + "__" + tag + ".tsv"),
                               table, field);
        }

        summary << tag << ": delta F1 "
                << fmt(report_on.macro_f1_mean - report_off.macro_f1_mean) << "\n";
    }
    return summary.str();
}

}  // namespace factsearch
