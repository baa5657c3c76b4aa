#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "factsearch/chat.hpp"
#include "factsearch/corpus.hpp"
#include "factsearch/prompts.hpp"
#include "factsearch/search.hpp"

namespace factsearch {

struct AgentConfig {
    BackendSpec generator;
    std::optional<SearchConfig> search;  // nullopt = offline mode
    int max_searches = 10;
    std::string prompt_variant_id = "default";
    double temperature = 1.0;
    std::optional<int> max_output_tokens;
};

enum class Termination { final_answer, budget_exhausted, turn_limit, backend_error };

std::string to_string(Termination t);
Termination parse_termination(std::string_view s);

struct SearchEvent {
    int ordinal = 0;             // 1-based
    std::string directive_text;  // full assistant output containing the directive
    SearchQuery query;
    EvidenceSummary summary;
};

struct Transcript {
    std::string statement_id;
    std::vector<Message> turns;  // starts with the task prompt as a user turn
    std::vector<SearchEvent> search_events;
    Termination terminated_by = Termination::final_answer;
    std::string final_text;  // last assistant output when a final answer exists
    std::string error;       // populated for backend-error terminations
};

// Turn injected once the search budget is exhausted but the generator still
// asks for a search.
inline constexpr const char* kBudgetExhaustedMessage =
    "You have used all searches; provide your final answer now";

// Prefix prepended to every evidence summary turn.
inline constexpr const char* kSearchResultPrefix = "Search result: ";

// Finds the first "SEARCH: " marker (or "SEARCH:" immediately followed by a
// non-space character) and returns the rest of that line, trimmed. The marker
// is case-sensitive and may appear mid-line; text on later lines is ignored.
std::optional<std::string> parse_search_directive(std::string_view text);

// The single task-prompt user message for the statement, selected by
// cfg.prompt_variant_id and by whether search is configured.
std::vector<Message> build_initial_messages(const Statement& statement, const AgentConfig& cfg,
                                            const PromptLibrary& prompts);

// Runs the conversation loop: generate, act on at most cfg.max_searches
// directives, then finalize. Total generator calls are capped at
// max_searches + 2. Backend failures terminate the transcript with its
// partial turns preserved.
Transcript run_agent(const Statement& statement, const AgentConfig& cfg, ChatGateway& gateway,
                     const PromptLibrary& prompts, const CompleteOptions& generator_options = {});

// Transcript persistence (one JSON file per statement/trial).
std::string transcript_to_json(const Transcript& t, const std::string& run_id,
                               const std::string& config_hash, int trial_index);
Transcript transcript_from_json(const std::string& json_text);

}  // namespace factsearch
