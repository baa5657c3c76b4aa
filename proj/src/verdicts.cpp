#include "factsearch/verdicts.hpp"

#include <cctype>

#include "factsearch/errors.hpp"
#include "factsearch/util.hpp"

namespace factsearch {

Verdict extract_prediction(std::string_view final_text) {
    constexpr std::string_view marker = "Factuality:";
    Verdict verdict;
    size_t pos = 0;
    while ((pos = final_text.find(marker, pos)) != std::string_view::npos) {
        size_t i = pos + marker.size();
        while (i < final_text.size() && std::isspace(static_cast<unsigned char>(final_text[i]))) ++i;
        if (i < final_text.size() && (final_text[i] == '0' || final_text[i] == '1')) {
            bool digit_follows =
                i + 1 < final_text.size() && std::isdigit(static_cast<unsigned char>(final_text[i + 1]));
            if (!digit_follows) {
                verdict.prediction = final_text[i] - '0';
                verdict.parsable = true;
                verdict.matched_text = std::string(final_text.substr(pos, i - pos + 1));
            }
        }
        pos += marker.size();
    }
    return verdict;
}

std::string to_string(ConfidenceVariant v) {
    switch (v) {
        case ConfidenceVariant::analysis_uncertainty: return "analysis-uncertainty";
        case ConfidenceVariant::search_confidence_1: return "search-confidence-1";
        case ConfidenceVariant::search_confidence_2: return "search-confidence-2";
        case ConfidenceVariant::search_confidence_3: return "search-confidence-3";
    }
    return "?";
}

ConfidenceVariant parse_confidence_variant(std::string_view s) {
    if (s == "analysis-uncertainty") return ConfidenceVariant::analysis_uncertainty;
    if (s == "search-confidence-1") return ConfidenceVariant::search_confidence_1;
    if (s == "search-confidence-2") return ConfidenceVariant::search_confidence_2;
    if (s == "search-confidence-3") return ConfidenceVariant::search_confidence_3;
    throw ConfigError("unknown confidence variant: \"" + std::string(s) + "\"");
}

namespace {

std::optional<ConfidenceScore> score_from_reply(const std::string& reply, ConfidenceVariant variant,
                                                long low, long high) {
    auto value = first_integer(reply);
    if (!value || *value < low || *value > high) return std::nullopt;
    return ConfidenceScore{static_cast<int>(*value), variant, reply};
}

std::optional<ConfidenceScore> ask_with_retry(const BackendSpec& scorer, ChatGateway& gateway,
                                              const ChatRequest& request, ConfidenceVariant variant) {
    std::string reply = gateway.complete(scorer, request).text;
    if (auto score = score_from_reply(reply, variant, 0, 100)) return score;
    CompleteOptions retry_options;
    retry_options.cache_salt = "confidence-retry";
    retry_options.bypass_cache_read = false;
    reply = gateway.complete(scorer, request, retry_options).text;
    return score_from_reply(reply, variant, 0, 100);
}

}  // namespace

std::optional<ConfidenceScore> elicit_confidence(const std::string& statement_text,
                                                 const std::string& analysis_text,
                                                 const BackendSpec& scorer, ChatGateway& gateway,
                                                 const PromptLibrary& prompts) {
    std::string prompt = render_template(
        prompts.get("confidence-analysis"),
        {{"statement", statement_text}, {"analysis", analysis_text}});
    ChatRequest request;
    request.model_id = scorer.model;
    request.messages = {user_msg(prompt)};
    return ask_with_retry(scorer, gateway, request, ConfidenceVariant::analysis_uncertainty);
}

std::optional<ConfidenceScore> elicit_search_confidence(
    const std::string& statement_text, const std::string& query_text,
    const std::string& result_summary, const BackendSpec& scorer, ChatGateway& gateway,
    const PromptLibrary& prompts, ConfidenceVariant variant) {
    std::string template_name;
    switch (variant) {
        case ConfidenceVariant::search_confidence_1: template_name = "confidence-search-1"; break;
        case ConfidenceVariant::search_confidence_2: template_name = "confidence-search-2"; break;
        case ConfidenceVariant::search_confidence_3: template_name = "confidence-search-3"; break;
        default: throw ConfigError("elicit_search_confidence needs a search-confidence variant");
    }
    std::string system_prompt = render_template(prompts.get(template_name),
                                                {{"statement", statement_text},
                                                 {"query", query_text},
                                                 {"result_summary", result_summary}});
    ChatRequest request;
    request.model_id = scorer.model;
    request.messages = {system_msg(system_prompt), user_msg(statement_text)};
    return ask_with_retry(scorer, gateway, request, variant);
}

std::optional<int> majority_vote(const std::vector<Verdict>& trials) {
    if (trials.empty()) throw ConfigError("majority_vote needs at least one trial");
    size_t zeros = 0, ones = 0;
    for (const auto& v : trials) {
        if (!v.parsable) continue;
        (*v.prediction == 0 ? zeros : ones)++;
    }
    if (zeros == ones) return std::nullopt;  // covers the all-unparsable case too
    return ones > zeros ? 1 : 0;
}

}  // namespace factsearch
