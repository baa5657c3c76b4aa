#include "factsearch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "factsearch/errors.hpp"

namespace factsearch {

F1Details f1_details(std::span<const int> preds, std::span<const int> labels) {
    if (preds.empty()) throw ConfigError("f1 needs at least one prediction");
    if (preds.size() != labels.size())
        throw ConfigError("f1 inputs differ in length: " + std::to_string(preds.size()) + " vs " +
                          std::to_string(labels.size()));
    // confusion counts per class c: tp, fp, fn
    auto class_f1 = [&](int c, bool& absent) {
        long tp = 0, fp = 0, fn = 0;
        bool seen = false;
        for (size_t i = 0; i < preds.size(); ++i) {
            if (preds[i] == c || labels[i] == c) seen = true;
            if (preds[i] == c && labels[i] == c) ++tp;
            else if (preds[i] == c) ++fp;
            else if (labels[i] == c) ++fn;
        }
        absent = !seen;
        long denom = 2 * tp + fp + fn;
        return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    };
    F1Details d;
    d.per_class.class0 = class_f1(0, d.class0_absent);
    d.per_class.class1 = class_f1(1, d.class1_absent);
    d.macro = (d.per_class.class0 + d.per_class.class1) / 2.0;
    return d;
}

double macro_f1(std::span<const int> preds, std::span<const int> labels) {
    return f1_details(preds, labels).macro;
}

PerClassF1 per_class_f1(std::span<const int> preds, std::span<const int> labels) {
    return f1_details(preds, labels).per_class;
}

double t_quantile_975(int dof) {
    // standard two-tailed 95% table, 3 decimals
    static const double table[30] = {
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
        2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
        2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    };
    if (dof < 1) throw ConfigError("t quantile needs dof >= 1");
    if (dof <= 30) return table[dof - 1];
    boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(dist, 0.975);
}

Interval ci95_over_trials(const std::vector<double>& f1_scores) {
    const size_t n = f1_scores.size();
    if (n < 2) throw ConfigError("ci95 needs at least two scores");
    double mean = std::accumulate(f1_scores.begin(), f1_scores.end(), 0.0) / static_cast<double>(n);
    double ss = 0;
    for (double x : f1_scores) ss += (x - mean) * (x - mean);
    double s = std::sqrt(ss / static_cast<double>(n - 1));
    double half = t_quantile_975(static_cast<int>(n) - 1) * s / std::sqrt(static_cast<double>(n));
    return {mean - half, mean + half};
}

Interval ci95_bootstrap(const std::vector<double>& f1_scores, std::uint64_t seed, int resamples) {
    const size_t n = f1_scores.size();
    if (n < 2) throw ConfigError("ci95 needs at least two scores");
    std::mt19937_64 rng(seed);
    std::vector<double> means(resamples);
    for (int r = 0; r < resamples; ++r) {
        double sum = 0;
        for (size_t i = 0; i < n; ++i) sum += f1_scores[rng() % n];
        means[r] = sum / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    auto at = [&](double q) {
        double idx = q * static_cast<double>(resamples - 1);
        return means[static_cast<size_t>(std::llround(idx))];
    };
    return {at(0.025), at(0.975)};
}

namespace {

// first bin [0, w], later bins (i*w, (i+1)*w]
int bin_of(double confidence, int n_bins) {
    if (confidence <= 0) return 0;
    int b = static_cast<int>(std::ceil(confidence * n_bins)) - 1;
    return std::clamp(b, 0, n_bins - 1);
}

void check_calibration_inputs(const std::vector<double>& confidences,
                              const std::vector<bool>& correct) {
    if (confidences.empty()) throw ConfigError("calibration needs at least one sample");
    if (confidences.size() != correct.size())
        throw ConfigError("calibration inputs differ in length");
}

}  // namespace

std::vector<ReliabilityBin> reliability_bins(const std::vector<double>& confidences,
                                             const std::vector<bool>& correct, int n_bins) {
    check_calibration_inputs(confidences, correct);
    if (n_bins < 1) throw ConfigError("need at least one bin");
    std::vector<ReliabilityBin> bins(n_bins);
    std::vector<double> conf_sum(n_bins, 0.0);
    std::vector<size_t> hits(n_bins, 0);
    for (int b = 0; b < n_bins; ++b) {
        bins[b].lo = static_cast<double>(b) / n_bins;
        bins[b].hi = static_cast<double>(b + 1) / n_bins;
    }
    for (size_t i = 0; i < confidences.size(); ++i) {
        int b = bin_of(confidences[i], n_bins);
        bins[b].count++;
        conf_sum[b] += confidences[i];
        if (correct[i]) hits[b]++;
    }
    for (int b = 0; b < n_bins; ++b) {
        if (bins[b].count == 0) continue;
        bins[b].mean_conf = conf_sum[b] / static_cast<double>(bins[b].count);
        bins[b].accuracy = static_cast<double>(hits[b]) / static_cast<double>(bins[b].count);
    }
    return bins;
}

double ece(const std::vector<double>& confidences, const std::vector<bool>& correct, int n_bins) {
    auto bins = reliability_bins(confidences, correct, n_bins);
    double total = static_cast<double>(confidences.size());
    double e = 0;
    for (const auto& b : bins) {
        if (b.count == 0) continue;
        e += (static_cast<double>(b.count) / total) * std::abs(b.accuracy - b.mean_conf);
    }
    return e;
}

double ece_equal_mass(const std::vector<double>& confidences, const std::vector<bool>& correct,
                      int n_bins) {
    check_calibration_inputs(confidences, correct);
    if (n_bins < 1) throw ConfigError("need at least one bin");
    const size_t n = confidences.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return confidences[a] < confidences[b]; });
    double e = 0;
    size_t start = 0;
    for (int b = 0; b < n_bins && start < n; ++b) {
        size_t end = n * static_cast<size_t>(b + 1) / static_cast<size_t>(n_bins);
        if (end <= start) continue;
        double conf_sum = 0;
        size_t hits = 0;
        for (size_t i = start; i < end; ++i) {
            conf_sum += confidences[order[i]];
            if (correct[order[i]]) ++hits;
        }
        double count = static_cast<double>(end - start);
        e += (count / static_cast<double>(n)) *
             std::abs(static_cast<double>(hits) / count - conf_sum / count);
        start = end;
    }
    return e;
}

double brier(const std::vector<double>& confidences, const std::vector<bool>& correct) {
    check_calibration_inputs(confidences, correct);
    double sum = 0;
    for (size_t i = 0; i < confidences.size(); ++i) {
        double d = confidences[i] - (correct[i] ? 1.0 : 0.0);
        sum += d * d;
    }
    return sum / static_cast<double>(confidences.size());
}

std::map<std::string, int> majority_by_statement(const std::vector<TrialRecord>& records) {
    std::map<std::string, std::vector<Verdict>> by_statement;
    for (const auto& r : records) by_statement[r.statement_id].push_back(r.verdict);
    std::map<std::string, int> out;
    for (const auto& [id, verdicts] : by_statement) {
        if (auto m = majority_vote(verdicts)) out[id] = *m;
    }
    return out;
}

UsageStats usage_stats(const std::vector<TrialRecord>& records) {
    auto majority = majority_by_statement(records);
    std::map<std::string, int> label_of;
    for (const auto& r : records) label_of[r.statement_id] = r.label;

    double correct_sum = 0, incorrect_sum = 0;
    size_t correct_n = 0, incorrect_n = 0;
    for (const auto& r : records) {
        auto it = majority.find(r.statement_id);
        if (it == majority.end()) continue;
        if (it->second == label_of[r.statement_id]) {
            correct_sum += r.n_searches;
            ++correct_n;
        } else {
            incorrect_sum += r.n_searches;
            ++incorrect_n;
        }
    }
    UsageStats stats;
    if (correct_n > 0) stats.correct_mean = correct_sum / static_cast<double>(correct_n);
    if (incorrect_n > 0) stats.incorrect_mean = incorrect_sum / static_cast<double>(incorrect_n);
    return stats;
}

std::string to_string(GroupingField g) {
    switch (g) {
        case GroupingField::missing_info: return "missing_info";
        case GroupingField::possibility: return "possibility";
        case GroupingField::label: return "label";
    }
    return "?";
}

GroupingField parse_grouping_field(std::string_view s) {
    if (s == "missing_info") return GroupingField::missing_info;
    if (s == "possibility") return GroupingField::possibility;
    if (s == "label") return GroupingField::label;
    throw ConfigError("unknown grouping field: \"" + std::string(s) + "\"");
}

SubgroupTable subgroup_f1_delta(const std::vector<TrialRecord>& records_on,
                                const std::vector<TrialRecord>& records_off, const Corpus& corpus,
                                GroupingField grouping, size_t min_count) {
    std::set<std::string> ids_on, ids_off;
    for (const auto& r : records_on) ids_on.insert(r.statement_id);
    for (const auto& r : records_off) ids_off.insert(r.statement_id);
    if (ids_on != ids_off) {
        std::string diff;
        for (const auto& id : ids_on)
            if (!ids_off.count(id)) diff += " +" + id;
        for (const auto& id : ids_off)
            if (!ids_on.count(id)) diff += " -" + id;
        throw ConfigError("record sets cover different statements:" + diff);
    }

    auto majority_on = majority_by_statement(records_on);
    auto majority_off = majority_by_statement(records_off);

    auto group_of = [&](const Statement& s) -> std::optional<std::string> {
        switch (grouping) {
            case GroupingField::missing_info:
                if (!s.missing_info) return std::nullopt;
                return to_string(*s.missing_info);
            case GroupingField::possibility:
                if (!s.possibility) return std::nullopt;
                return to_string(*s.possibility);
            case GroupingField::label:
                return std::to_string(s.label);
        }
        return std::nullopt;
    };

    struct GroupData {
        std::vector<int> preds_on, labels_on;
        std::vector<int> preds_off, labels_off;
        size_t n = 0;
    };
    std::map<std::string, GroupData> groups;
    SubgroupTable table;

    for (const auto& s : corpus.statements) {
        if (!ids_on.count(s.id)) continue;
        auto group = group_of(s);
        if (!group) {
            table.skipped_missing_field++;
            continue;
        }
        auto& g = groups[*group];
        g.n++;
        if (auto it = majority_on.find(s.id); it != majority_on.end()) {
            g.preds_on.push_back(it->second);
            g.labels_on.push_back(s.label);
        }
        if (auto it = majority_off.find(s.id); it != majority_off.end()) {
            g.preds_off.push_back(it->second);
            g.labels_off.push_back(s.label);
        }
    }

    for (const auto& [name, g] : groups) {
        if (g.n < min_count) {
            table.suppressed.push_back(name);
            continue;
        }
        SubgroupDelta row;
        row.group = name;
        row.n = g.n;
        row.f1_on = g.preds_on.empty() ? 0.0 : macro_f1(g.preds_on, g.labels_on);
        row.f1_off = g.preds_off.empty() ? 0.0 : macro_f1(g.preds_off, g.labels_off);
        row.delta = row.f1_on - row.f1_off;
        table.rows.push_back(std::move(row));
    }
    return table;
}

MetricsReport build_metrics_report(const std::vector<TrialRecord>& records, int n_bins) {
    if (records.empty()) throw ConfigError("metrics report needs at least one record");
    MetricsReport report;
    report.n_records = records.size();

    int max_trial = 0;
    size_t parsable = 0;
    for (const auto& r : records) {
        max_trial = std::max(max_trial, r.trial_index);
        if (r.verdict.parsable) ++parsable;
    }
    report.parsed_rate = static_cast<double>(parsable) / static_cast<double>(records.size());

    // per-trial macro F1 over parsable records
    std::vector<int> pooled_preds, pooled_labels;
    for (int t = 1; t <= max_trial; ++t) {
        std::vector<int> preds, labels;
        for (const auto& r : records) {
            if (r.trial_index != t || !r.verdict.parsable) continue;
            preds.push_back(*r.verdict.prediction);
            labels.push_back(r.label);
        }
        if (preds.empty()) {
            report.warnings.push_back("trial " + std::to_string(t) + " has no parsable records");
            continue;
        }
        report.per_trial_f1.push_back(macro_f1(preds, labels));
        pooled_preds.insert(pooled_preds.end(), preds.begin(), preds.end());
        pooled_labels.insert(pooled_labels.end(), labels.begin(), labels.end());
    }
    if (!report.per_trial_f1.empty()) {
        report.macro_f1_mean =
            std::accumulate(report.per_trial_f1.begin(), report.per_trial_f1.end(), 0.0) /
            static_cast<double>(report.per_trial_f1.size());
        if (report.per_trial_f1.size() >= 2) report.ci95 = ci95_over_trials(report.per_trial_f1);
        else report.ci95 = {report.macro_f1_mean, report.macro_f1_mean};
    }
    if (!pooled_preds.empty()) {
        auto details = f1_details(pooled_preds, pooled_labels);
        report.per_class = details.per_class;
        if (details.class0_absent) report.warnings.push_back("class 0 absent; its F1 pinned to 0");
        if (details.class1_absent) report.warnings.push_back("class 1 absent; its F1 pinned to 0");
    }

    std::vector<double> confidences;
    std::vector<bool> correct;
    for (const auto& r : records) {
        if (!r.confidence || !r.verdict.parsable) continue;
        confidences.push_back(static_cast<double>(r.confidence->value) / 100.0);
        correct.push_back(*r.verdict.prediction == r.label);
    }
    report.n_scored = confidences.size();
    if (!confidences.empty()) {
        report.ece_score = ece(confidences, correct, n_bins);
        report.brier_score = brier(confidences, correct);
        report.bins = reliability_bins(confidences, correct, n_bins);
    }
    report.searches = usage_stats(records);
    return report;
}

}  // namespace factsearch
