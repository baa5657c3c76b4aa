#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "factsearch/chat.hpp"
#include "factsearch/prompts.hpp"

namespace factsearch {

struct Verdict {
    std::optional<int> prediction;  // 0 or 1; absent iff !parsable
    bool parsable = false;
    std::optional<std::string> matched_text;  // the matched "Factuality: d" span
    int source_turn = -1;                     // filled by callers that know the turn index
};

// Scans for "Factuality:" + optional whitespace + a single digit 0/1 (not
// followed by another digit) and keeps the LAST occurrence. Total function;
// no match means parsable=false.
Verdict extract_prediction(std::string_view final_text);

enum class ConfidenceVariant {
    analysis_uncertainty,
    search_confidence_1,
    search_confidence_2,
    search_confidence_3,
};

std::string to_string(ConfidenceVariant v);
ConfidenceVariant parse_confidence_variant(std::string_view s);

struct ConfidenceScore {
    int value = 0;  // 0..100; high = certain
    ConfidenceVariant prompt_variant = ConfidenceVariant::analysis_uncertainty;
    std::string raw_reply;
};

// One scorer call on the confidence template; the reply's first integer is
// accepted when it lies in 0..100 (no clamping). Invalid replies are retried
// once with the cache bypassed, then reported as nullopt.
std::optional<ConfidenceScore> elicit_confidence(const std::string& statement_text,
                                                 const std::string& analysis_text,
                                                 const BackendSpec& scorer, ChatGateway& gateway,
                                                 const PromptLibrary& prompts);

// Appendix-style variants that score one search round trip instead of the
// final analysis. Variants 1 and 2 send only the statement as the user turn;
// variant 3 also substitutes the query and result summary into the prompt.
std::optional<ConfidenceScore> elicit_search_confidence(
    const std::string& statement_text, const std::string& query_text,
    const std::string& result_summary, const BackendSpec& scorer, ChatGateway& gateway,
    const PromptLibrary& prompts, ConfidenceVariant variant);

// Majority over parsable predictions; ties and all-unparsable sets yield
// nullopt (no tie-break guessing).
std::optional<int> majority_vote(const std::vector<Verdict>& trials);

}  // namespace factsearch
