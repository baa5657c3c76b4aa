#include "factsearch/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

#include "factsearch/domains.hpp"
#include "factsearch/errors.hpp"
#include "factsearch/util.hpp"

namespace factsearch {

DomainCounts extract_domains(const std::vector<Transcript>& transcripts) {
    std::unordered_map<std::string, size_t> counts;
    DomainCounts out;
    for (const auto& t : transcripts) {
        for (const auto& event : t.search_events) {
            for (const auto& r : event.summary.results_used) {
                auto host = host_of_url(r.url);
                if (!host) {
                    out.skipped_urls++;
                    continue;
                }
                counts[normalize_domain(*host)]++;
            }
        }
    }
    out.profiles.reserve(counts.size());
    for (const auto& [domain, count] : counts) out.profiles.push_back({domain, count, {}, {}});
    std::sort(out.profiles.begin(), out.profiles.end(), [](const auto& a, const auto& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.domain < b.domain;
    });
    return out;
}

BiasTable BiasTable::load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open bias table: " + path.string());
    BiasTable table;
    table.provenance = path.string();
    std::string line;
    if (!std::getline(in, line)) return table;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = parse_csv_row(line);
    std::map<std::string, size_t> col;
    for (size_t i = 0; i < header.size(); ++i) col[to_lower(trim(header[i]))] = i;
    if (!col.count("domain")) throw FormatError("bias table needs a domain column");

    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto row = parse_csv_row(line);
        auto cell = [&](const char* name) -> std::optional<std::string> {
            auto it = col.find(name);
            if (it == col.end() || it->second >= row.size()) return std::nullopt;
            auto v = trim(row[it->second]);
            if (v.empty()) return std::nullopt;
            return v;
        };
        auto domain_cell = cell("domain");
        if (!domain_cell)
            throw FormatError("bias table line " + std::to_string(line_no) + ": missing domain");
        BiasEntry entry;
        try {
            if (auto b = cell("bias")) entry.bias = std::stod(*b);
            if (auto q = cell("quality")) entry.quality = std::stod(*q);
        } catch (const std::exception&) {
            throw FormatError("bias table line " + std::to_string(line_no) + ": non-numeric value");
        }
        if (entry.bias && (*entry.bias < -3.0 || *entry.bias > 3.0))
            throw FormatError("bias table line " + std::to_string(line_no) + ": bias outside [-3,3]");
        if (entry.quality && (*entry.quality < 0.0 || *entry.quality > 1.0))
            throw FormatError("bias table line " + std::to_string(line_no) + ": quality outside [0,1]");
        table.entries[normalize_domain(*domain_cell)] = entry;
    }
    return table;
}

std::optional<BiasEntry> BiasTable::lookup(const std::string& domain) const {
    auto it = entries.find(normalize_domain(domain));
    if (it != entries.end()) return it->second;
    static const PublicSuffixList psl = PublicSuffixList::builtin();
    auto registered = psl.registered_domain(domain);
    if (registered != domain) {
        it = entries.find(registered);
        if (it != entries.end()) return it->second;
    }
    return std::nullopt;
}

BiasJoin join_bias(const std::vector<SourceProfile>& profiles, const BiasTable& table) {
    BiasJoin join;
    join.profiles = profiles;
    size_t total_usages = 0, covered_usages = 0;
    double bias_weighted = 0, quality_weighted = 0;
    size_t bias_weight = 0, quality_weight = 0;
    double bias_flat = 0, quality_flat = 0;
    size_t bias_domains = 0, quality_domains = 0;

    for (auto& p : join.profiles) {
        total_usages += p.count;
        auto entry = table.lookup(p.domain);
        if (!entry) continue;
        covered_usages += p.count;
        p.bias = entry->bias;
        p.quality = entry->quality;
        if (entry->bias) {
            bias_weighted += *entry->bias * static_cast<double>(p.count);
            bias_weight += p.count;
            bias_flat += *entry->bias;
            bias_domains++;
        }
        if (entry->quality) {
            quality_weighted += *entry->quality * static_cast<double>(p.count);
            quality_weight += p.count;
            quality_flat += *entry->quality;
            quality_domains++;
        }
    }
    join.coverage = total_usages == 0
                        ? 0.0
                        : static_cast<double>(covered_usages) / static_cast<double>(total_usages);
    if (bias_weight > 0) {
        join.mean_bias = bias_weighted / static_cast<double>(bias_weight);
        join.mean_bias_unweighted = bias_flat / static_cast<double>(bias_domains);
    }
    if (quality_weight > 0) {
        join.mean_quality = quality_weighted / static_cast<double>(quality_weight);
        join.mean_quality_unweighted = quality_flat / static_cast<double>(quality_domains);
    }
    return join;
}

std::optional<int> score_statement_leaning(const Statement& statement, const BackendSpec& scorer,
                                           ChatGateway& gateway, const PromptLibrary& prompts) {
    std::string prompt =
        render_template(prompts.get("bias-statement"), {{"statement", statement.text}});
    ChatRequest request;
    request.model_id = scorer.model;
    request.messages = {user_msg(prompt)};

    auto parse = [](const std::string& reply) -> std::optional<int> {
        auto value = first_integer(reply);
        if (!value || *value < -3 || *value > 3) return std::nullopt;
        return static_cast<int>(*value);
    };
    try {
        if (auto v = parse(gateway.complete(scorer, request).text)) return v;
        CompleteOptions retry_options;
        retry_options.cache_salt = "leaning-retry";
        if (auto v = parse(gateway.complete(scorer, request, retry_options).text)) return v;
    } catch (const Error&) {
        return std::nullopt;  // failures are recorded, not propagated
    }
    return std::nullopt;
}

ImprovementSplit improvement_split(const std::vector<TrialRecord>& records_on,
                                   const std::vector<TrialRecord>& records_off) {
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
    std::map<std::string, int> label_of;
    for (const auto& r : records_on) label_of[r.statement_id] = r.label;

    ImprovementSplit split;
    for (const auto& id : ids_on) {
        auto on = majority_on.find(id);
        auto off = majority_off.find(id);
        if (on == majority_on.end() || off == majority_off.end()) {
            split.no_change.push_back(id);
            split.flagged.push_back(id);
            continue;
        }
        bool on_correct = on->second == label_of[id];
        bool off_correct = off->second == label_of[id];
        if (on_correct && !off_correct) split.search_helps.push_back(id);
        else if (!on_correct && off_correct) split.search_hurts.push_back(id);
        else split.no_change.push_back(id);
    }
    return split;
}

}  // namespace factsearch
