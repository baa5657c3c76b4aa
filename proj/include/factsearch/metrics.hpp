#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "factsearch/corpus.hpp"
#include "factsearch/verdicts.hpp"

namespace factsearch {

struct TrialRecord {
    std::string statement_id;
    int trial_index = 1;  // 1..T
    Verdict verdict;
    std::optional<ConfidenceScore> confidence;
    bool confidence_failed = false;  // elicitation attempted and failed
    int n_searches = 0;
    int label = 0;
};

struct PerClassF1 {
    double class0 = 0;
    double class1 = 0;
};

struct F1Details {
    PerClassF1 per_class;
    double macro = 0;
    bool class0_absent = false;  // class missing from preds and labels; F1 pinned to 0
    bool class1_absent = false;
};

// Unparsable entries must already be excluded; inputs are binary.
F1Details f1_details(std::span<const int> preds, std::span<const int> labels);
double macro_f1(std::span<const int> preds, std::span<const int> labels);
PerClassF1 per_class_f1(std::span<const int> preds, std::span<const int> labels);

struct Interval {
    double low = 0;
    double high = 0;
};

// Two-sided 0.975 t quantile: standard 3-decimal table values for df <= 30
// (so five trials use the conventional 2.776), exact beyond.
double t_quantile_975(int dof);

// mean +/- t(0.975, n-1) * s / sqrt(n) with the sample standard deviation.
Interval ci95_over_trials(const std::vector<double>& f1_scores);
// Percentile bootstrap alternative for sensitivity checks.
Interval ci95_bootstrap(const std::vector<double>& f1_scores, std::uint64_t seed,
                        int resamples = 10000);

// Equal-width bins over [0,1], first bin closed on the left, the rest
// right-closed; empty bins are skipped.
double ece(const std::vector<double>& confidences, const std::vector<bool>& correct, int n_bins);
// Equal-mass (quantile) binning alternative.
double ece_equal_mass(const std::vector<double>& confidences, const std::vector<bool>& correct,
                      int n_bins);
double brier(const std::vector<double>& confidences, const std::vector<bool>& correct);

struct ReliabilityBin {
    double lo = 0;
    double hi = 0;
    double mean_conf = 0;
    double accuracy = 0;
    size_t count = 0;
};

std::vector<ReliabilityBin> reliability_bins(const std::vector<double>& confidences,
                                             const std::vector<bool>& correct, int n_bins);

struct UsageStats {
    std::optional<double> correct_mean;
    std::optional<double> incorrect_mean;
};

// Mean searches per trial record, grouped by whether the statement's
// majority-vote prediction matches its label. Statements with no majority
// are excluded.
UsageStats usage_stats(const std::vector<TrialRecord>& records);

enum class GroupingField { missing_info, possibility, label };

std::string to_string(GroupingField g);
GroupingField parse_grouping_field(std::string_view s);

struct SubgroupDelta {
    std::string group;
    double f1_on = 0;
    double f1_off = 0;
    double delta = 0;
    size_t n = 0;  // statements contributing
};

struct SubgroupTable {
    std::vector<SubgroupDelta> rows;
    size_t skipped_missing_field = 0;          // statements lacking the grouping field
    std::vector<std::string> suppressed;       // groups below the minimum count
};

// F1 per subgroup on majority-vote predictions, delta = on - off. Both record
// sets must cover the same statements. Groups with fewer than min_count
// statements are suppressed.
SubgroupTable subgroup_f1_delta(const std::vector<TrialRecord>& records_on,
                                const std::vector<TrialRecord>& records_off, const Corpus& corpus,
                                GroupingField grouping, size_t min_count = 20);

struct MetricsReport {
    double macro_f1_mean = 0;
    Interval ci95;
    PerClassF1 per_class;       // pooled over all parsable trials
    double parsed_rate = 0;
    std::optional<double> ece_score;
    std::optional<double> brier_score;
    std::vector<ReliabilityBin> bins;
    UsageStats searches;
    size_t n_records = 0;
    size_t n_scored = 0;        // records with confidence and a parsable verdict
    std::vector<double> per_trial_f1;
    std::vector<std::string> warnings;
};

MetricsReport build_metrics_report(const std::vector<TrialRecord>& records, int n_bins = 10);

// Per-statement majority predictions (id -> 0/1); statements whose trials
// have no majority are omitted.
std::map<std::string, int> majority_by_statement(const std::vector<TrialRecord>& records);

}  // namespace factsearch
