#include "factsearch/agent.hpp"

#include <cctype>

#include <nlohmann/json.hpp>

#include "factsearch/errors.hpp"
#include "factsearch/util.hpp"

namespace factsearch {

std::string to_string(Termination t) {
    switch (t) {
        case Termination::final_answer: return "final-answer";
        case Termination::budget_exhausted: return "budget-exhausted";
        case Termination::turn_limit: return "turn-limit";
        case Termination::backend_error: return "backend-error";
    }
    return "?";
}

Termination parse_termination(std::string_view s) {
    if (s == "final-answer") return Termination::final_answer;
    if (s == "budget-exhausted") return Termination::budget_exhausted;
    if (s == "turn-limit") return Termination::turn_limit;
    if (s == "backend-error") return Termination::backend_error;
    throw FormatError("unknown termination: \"" + std::string(s) + "\"");
}

std::optional<std::string> parse_search_directive(std::string_view text) {
    constexpr std::string_view marker = "SEARCH:";
    size_t pos = 0;
    while ((pos = text.find(marker, pos)) != std::string_view::npos) {
        size_t after = pos + marker.size();
        bool accepted = false;
        if (after < text.size() && text[after] == ' ') {
            accepted = true;  // canonical "SEARCH: " form
            ++after;
        } else if (after < text.size() && !std::isspace(static_cast<unsigned char>(text[after]))) {
            accepted = true;  // tolerated "SEARCH:query" form
        }
        if (!accepted) {
            pos += marker.size();
            continue;
        }
        size_t eol = text.find('\n', after);
        std::string_view line =
            eol == std::string_view::npos ? text.substr(after) : text.substr(after, eol - after);
        return trim(line);
    }
    return std::nullopt;
}

std::vector<Message> build_initial_messages(const Statement& statement, const AgentConfig& cfg,
                                            const PromptLibrary& prompts) {
    const bool search_mode = cfg.search.has_value();
    const std::string& tpl = prompts.variant(cfg.prompt_variant_id, search_mode);
    return {user_msg(render_template(tpl, {{"statement", statement.text}}))};
}

Transcript run_agent(const Statement& statement, const AgentConfig& cfg, ChatGateway& gateway,
                     const PromptLibrary& prompts, const CompleteOptions& generator_options) {
    Transcript t;
    t.statement_id = statement.id;
    t.turns = build_initial_messages(statement, cfg, prompts);

    auto generate = [&]() -> std::string {
        ChatRequest request;
        request.model_id = cfg.generator.model;
        request.messages = t.turns;
        request.temperature = cfg.temperature;
        request.max_output_tokens = cfg.max_output_tokens;
        return gateway.complete(cfg.generator, request, generator_options).text;
    };

    const int max_calls = cfg.max_searches + 2;
    int calls = 0;
    try {
        while (true) {
            if (calls >= max_calls) {
                t.terminated_by = Termination::turn_limit;
                return t;
            }
            std::string output = generate();
            ++calls;
            auto directive = parse_search_directive(output);
            bool actionable = cfg.search && directive && !directive->empty();
            if (!actionable) {
                t.turns.push_back(assistant_msg(output));
                t.final_text = output;
                t.terminated_by = Termination::final_answer;
                return t;
            }
            if (static_cast<int>(t.search_events.size()) >= cfg.max_searches) {
                // budget spent: force one final generation
                t.turns.push_back(assistant_msg(output));
                t.turns.push_back(user_msg(kBudgetExhaustedMessage));
                std::string final_output = generate();
                ++calls;
                t.turns.push_back(assistant_msg(final_output));
                t.final_text = final_output;
                t.terminated_by = Termination::budget_exhausted;
                return t;
            }
            SearchQuery query{*directive, statement.id};
            EvidenceSummary summary = answer_query(query, *cfg.search, gateway);
            SearchEvent event;
            event.ordinal = static_cast<int>(t.search_events.size()) + 1;
            event.directive_text = output;
            event.query = query;
            event.summary = summary;
            t.search_events.push_back(std::move(event));
            t.turns.push_back(assistant_msg(output));
            t.turns.push_back(user_msg(kSearchResultPrefix + summary.text));
        }
    } catch (const Error& e) {
        t.terminated_by = Termination::backend_error;
        t.error = e.what();
        return t;
    }
}

namespace {

nlohmann::json result_to_json(const WebResult& r) {
    return {{"title", r.title}, {"url", r.url}, {"content", r.snippet_or_content}, {"rank", r.rank}};
}

WebResult result_from_json_obj(const nlohmann::json& j) {
    return {j.value("title", ""), j.value("url", ""), j.value("content", ""), j.value("rank", 0)};
}

}  // namespace

std::string transcript_to_json(const Transcript& t, const std::string& run_id,
                               const std::string& config_hash, int trial_index) {
    nlohmann::json j;
    j["run_id"] = run_id;
    j["config_hash"] = config_hash;
    j["statement_id"] = t.statement_id;
    j["trial"] = trial_index;
    j["terminated_by"] = to_string(t.terminated_by);
    j["final_text"] = t.final_text;
    if (!t.error.empty()) j["error"] = t.error;
    auto turns = nlohmann::json::array();
    for (const auto& m : t.turns) turns.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    j["turns"] = turns;
    auto events = nlohmann::json::array();
    for (const auto& e : t.search_events) {
        nlohmann::json ev;
        ev["ordinal"] = e.ordinal;
        ev["directive_text"] = e.directive_text;
        ev["query"] = e.query.text;
        ev["summary"] = {{"text", e.summary.text},
                         {"backend_kind", to_string(e.summary.backend_kind)}};
        auto used = nlohmann::json::array();
        for (const auto& r : e.summary.results_used) used.push_back(result_to_json(r));
        ev["summary"]["results_used"] = used;
        ev["summary"]["chunks_used"] = e.summary.chunks_used;
        events.push_back(std::move(ev));
    }
    j["search_events"] = events;
    return j.dump();
}

Transcript transcript_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    Transcript t;
    t.statement_id = j.value("statement_id", "");
    t.terminated_by = parse_termination(j.value("terminated_by", "final-answer"));
    t.final_text = j.value("final_text", "");
    t.error = j.value("error", "");
    for (const auto& m : j.value("turns", nlohmann::json::array()))
        t.turns.push_back({parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
    for (const auto& ev : j.value("search_events", nlohmann::json::array())) {
        SearchEvent e;
        e.ordinal = ev.value("ordinal", 0);
        e.directive_text = ev.value("directive_text", "");
        e.query = {ev.value("query", ""), t.statement_id};
        const auto& s = ev.at("summary");
        e.summary.text = s.value("text", "");
        e.summary.backend_kind = parse_search_backend_kind(s.value("backend_kind", "mock"));
        e.summary.query = e.query;
        for (const auto& r : s.value("results_used", nlohmann::json::array()))
            e.summary.results_used.push_back(result_from_json_obj(r));
        for (const auto& c : s.value("chunks_used", nlohmann::json::array()))
            e.summary.chunks_used.push_back(c.get<std::string>());
        t.search_events.push_back(std::move(e));
    }
    return t;
}

}  // namespace factsearch
