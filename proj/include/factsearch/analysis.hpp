#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "factsearch/agent.hpp"
#include "factsearch/chat.hpp"
#include "factsearch/corpus.hpp"
#include "factsearch/metrics.hpp"
#include "factsearch/prompts.hpp"

namespace factsearch {

struct SourceProfile {
    std::string domain;  // normalized (lowercase, no scheme, no leading www.)
    size_t count = 0;
    std::optional<double> bias;     // -3..3
    std::optional<double> quality;  // 0..1
};

struct DomainCounts {
    std::vector<SourceProfile> profiles;  // descending count, ties by domain ascending
    size_t skipped_urls = 0;              // URLs with no parseable host
};

DomainCounts extract_domains(const std::vector<Transcript>& transcripts);

struct BiasEntry {
    std::optional<double> bias;
    std::optional<double> quality;
};

struct BiasTable {
    std::map<std::string, BiasEntry> entries;  // keyed by normalized domain
    std::string provenance;

    // CSV with header domain,bias,quality; empty cells allowed.
    static BiasTable load_csv(const std::filesystem::path& path);
    std::optional<BiasEntry> lookup(const std::string& domain) const;
};

struct BiasJoin {
    std::vector<SourceProfile> profiles;  // enriched with bias/quality where covered
    double coverage = 0;                  // covered usages / total usages
    std::optional<double> mean_bias;      // usage-weighted
    std::optional<double> mean_quality;
    std::optional<double> mean_bias_unweighted;  // per distinct covered domain
    std::optional<double> mean_quality_unweighted;
};

// Lookup is exact on the normalized domain, then falls back to the
// registered domain so "en.wikipedia.org" can match a "wikipedia.org" row.
BiasJoin join_bias(const std::vector<SourceProfile>& profiles, const BiasTable& table);

// One scorer call on the political-leaning prompt; first integer in -3..3,
// one retry, then nullopt (failures are recorded by callers, never thrown).
std::optional<int> score_statement_leaning(const Statement& statement, const BackendSpec& scorer,
                                           ChatGateway& gateway, const PromptLibrary& prompts);

struct ImprovementSplit {
    std::vector<std::string> search_helps;
    std::vector<std::string> search_hurts;
    std::vector<std::string> no_change;
    std::vector<std::string> flagged;  // no majority on at least one side; counted in no_change
};

// Majority-vote comparison per statement: online correct & offline wrong ->
// search-helps; the converse -> search-hurts; everything else -> no-change.
ImprovementSplit improvement_split(const std::vector<TrialRecord>& records_on,
                                   const std::vector<TrialRecord>& records_off);

}  // namespace factsearch
