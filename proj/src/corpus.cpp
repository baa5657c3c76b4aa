#include "factsearch/corpus.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "factsearch/errors.hpp"
#include "factsearch/util.hpp"

namespace factsearch {

namespace {

// "Pants-Fire", "pants_fire", "BARELY TRUE" -> "pants-fire", "barely-true"
std::string canonical_tag(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : trim(raw)) {
        if (c == '_' || c == ' ')
            out += '-';
        else
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

}  // namespace

std::pair<size_t, size_t> Corpus::label_counts() const {
    size_t zeros = 0, ones = 0;
    for (const auto& s : statements) (s.label == 0 ? zeros : ones)++;
    return {zeros, ones};
}

RawLabel parse_raw_label(std::string_view raw) {
    std::string c = canonical_tag(raw);
    if (c == "pants-fire") return RawLabel::pants_fire;
    if (c == "false") return RawLabel::false_;
    if (c == "barely-true") return RawLabel::barely_true;
    if (c == "half-true") return RawLabel::half_true;
    if (c == "mostly-true") return RawLabel::mostly_true;
    if (c == "true") return RawLabel::true_;
    throw FormatError("unknown raw label: \"" + std::string(raw) + "\"");
}

std::string to_string(RawLabel l) {
    switch (l) {
        case RawLabel::pants_fire: return "pants-fire";
        case RawLabel::false_: return "false";
        case RawLabel::barely_true: return "barely-true";
        case RawLabel::half_true: return "half-true";
        case RawLabel::mostly_true: return "mostly-true";
        case RawLabel::true_: return "true";
    }
    return "?";
}

Possibility parse_possibility(std::string_view s) {
    std::string c = canonical_tag(s);
    if (c == "possible" || c == "p") return Possibility::possible;
    if (c == "hard" || c == "h") return Possibility::hard;
    if (c == "impossible" || c == "i") return Possibility::impossible;
    throw FormatError("unknown possibility value: \"" + std::string(s) + "\"");
}

std::string to_string(Possibility p) {
    switch (p) {
        case Possibility::possible: return "possible";
        case Possibility::hard: return "hard";
        case Possibility::impossible: return "impossible";
    }
    return "?";
}

MissingInfo parse_missing_info(std::string_view s) {
    std::string c = canonical_tag(s);
    if (c == "speaker") return MissingInfo::speaker;
    if (c == "location") return MissingInfo::location;
    if (c == "textual-evidence") return MissingInfo::textual_evidence;
    if (c == "non-textual-evidence") return MissingInfo::non_textual_evidence;
    if (c == "date") return MissingInfo::date;
    if (c == "none") return MissingInfo::none;
    throw FormatError("unknown missing_info value: \"" + std::string(s) + "\"");
}

std::string to_string(MissingInfo m) {
    switch (m) {
        case MissingInfo::speaker: return "speaker";
        case MissingInfo::location: return "location";
        case MissingInfo::textual_evidence: return "textual-evidence";
        case MissingInfo::non_textual_evidence: return "non-textual-evidence";
        case MissingInfo::date: return "date";
        case MissingInfo::none: return "none";
    }
    return "?";
}

int binarize_label(RawLabel raw) {
    switch (raw) {
        case RawLabel::half_true:
        case RawLabel::mostly_true:
        case RawLabel::true_:
            return 1;
        case RawLabel::pants_fire:
        case RawLabel::false_:
        case RawLabel::barely_true:
            return 0;
    }
    throw FormatError("unknown raw label enum value");
}

int binarize_label(std::string_view raw) { return binarize_label(parse_raw_label(raw)); }

namespace {

struct RawRecord {
    std::string id;
    std::string text;
    std::optional<std::string> raw_label;
    std::optional<int> label;
    std::optional<std::string> possibility;
    std::optional<std::string> missing_info;
    std::optional<std::string> language;
};

Statement finish_record(const RawRecord& r, size_t line_no) {
    auto fail = [&](const std::string& msg) -> FormatError {
        return FormatError("line " + std::to_string(line_no) + ": " + msg);
    };
    if (r.id.empty()) throw fail("missing id");
    if (r.text.empty()) throw fail("missing text");

    Statement s;
    s.id = r.id;
    s.text = r.text;
    if (r.raw_label) {
        try {
            s.raw_label = parse_raw_label(*r.raw_label);
        } catch (const FormatError& e) {
            throw fail(e.what());
        }
        s.label = binarize_label(*s.raw_label);
        if (r.label && *r.label != s.label)
            throw fail("label " + std::to_string(*r.label) + " conflicts with raw_label \"" +
                       *r.raw_label + "\" (binarizes to " + std::to_string(s.label) + ")");
    } else if (r.label) {
        if (*r.label != 0 && *r.label != 1)
            throw fail("label must be 0 or 1, got " + std::to_string(*r.label));
        s.label = *r.label;
    } else {
        throw fail("record needs raw_label or label");
    }
    try {
        if (r.possibility && !trim(*r.possibility).empty())
            s.possibility = parse_possibility(*r.possibility);
        if (r.missing_info && !trim(*r.missing_info).empty())
            s.missing_info = parse_missing_info(*r.missing_info);
    } catch (const FormatError& e) {
        throw fail(e.what());
    }
    if (r.language && !trim(*r.language).empty()) s.language = *r.language;
    return s;
}

Corpus load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open corpus file: " + path.string());
    Corpus corpus;
    corpus.name = path.stem().string();
    std::unordered_set<std::string> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        if (!j.is_object())
            throw FormatError("line " + std::to_string(line_no) + ": record must be a JSON object");
        RawRecord r;
        try {
            if (j.contains("id")) {
                // ids may arrive as numbers from some exports
                r.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
            }
            if (j.contains("text")) r.text = j["text"].get<std::string>();
            if (j.contains("raw_label")) r.raw_label = j["raw_label"].get<std::string>();
            if (j.contains("label")) {
                if (j["label"].is_number_integer())
                    r.label = j["label"].get<int>();
                else if (j["label"].is_string())
                    r.label = std::stoi(j["label"].get<std::string>());
                else
                    throw FormatError("label must be an integer");
            }
            if (j.contains("possibility")) r.possibility = j["possibility"].get<std::string>();
            if (j.contains("missing_info")) r.missing_info = j["missing_info"].get<std::string>();
            if (j.contains("language")) r.language = j["language"].get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
        Statement s = finish_record(r, line_no);
        if (!seen_ids.insert(s.id).second)
            throw FormatError("line " + std::to_string(line_no) + ": duplicate id \"" + s.id + "\"");
        corpus.statements.push_back(std::move(s));
    }
    return corpus;
}

Corpus load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open corpus file: " + path.string());
    Corpus corpus;
    corpus.name = path.stem().string();
    std::string line;
    if (!std::getline(in, line)) return corpus;  // empty file
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = parse_csv_row(line);
    std::unordered_map<std::string, size_t> col;
    for (size_t i = 0; i < header.size(); ++i) col[to_lower(trim(header[i]))] = i;
    if (!col.count("id") || !col.count("text"))
        throw FormatError("csv corpus needs id and text columns");

    auto cell = [&](const std::vector<std::string>& row, const char* name) -> std::optional<std::string> {
        auto it = col.find(name);
        if (it == col.end() || it->second >= row.size()) return std::nullopt;
        std::string v = row[it->second];
        if (trim(v).empty()) return std::nullopt;
        return v;
    };

    std::unordered_set<std::string> seen_ids;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto row = parse_csv_row(line);
        RawRecord r;
        r.id = cell(row, "id").value_or("");
        r.text = cell(row, "text").value_or("");
        r.raw_label = cell(row, "raw_label");
        if (auto v = cell(row, "label")) {
            try {
                r.label = std::stoi(*v);
            } catch (const std::exception&) {
                throw FormatError("line " + std::to_string(line_no) + ": label must be an integer, got \"" + *v + "\"");
            }
        }
        r.possibility = cell(row, "possibility");
        r.missing_info = cell(row, "missing_info");
        r.language = cell(row, "language");
        Statement s = finish_record(r, line_no);
        if (!seen_ids.insert(s.id).second)
            throw FormatError("line " + std::to_string(line_no) + ": duplicate id \"" + s.id + "\"");
        corpus.statements.push_back(std::move(s));
    }
    return corpus;
}

// Unbiased bounded draw from raw mt19937 words (rejection sampling). Written
// out explicitly because std::uniform_int_distribution is not bit-stable
// across standard libraries; this keeps subsamples portable.
std::uint32_t bounded_draw(std::mt19937& rng, std::uint32_t bound) {
    const std::uint64_t span = 0x100000000ULL;
    std::uint32_t limit = static_cast<std::uint32_t>(span - span % bound);
    std::uint32_t w;
    do {
        w = rng();
    } while (w >= limit && limit != 0);
    return w % bound;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    switch (format) {
        case CorpusFormat::jsonl: return load_jsonl(path);
        case CorpusFormat::csv: return load_csv(path);
    }
    throw ConfigError("unknown corpus format");
}

Corpus subsample(const Corpus& corpus, size_t n, std::uint64_t seed) {
    if (n > corpus.size())
        throw ConfigError("subsample size " + std::to_string(n) + " exceeds corpus size " +
                          std::to_string(corpus.size()));
    Corpus out;
    out.name = corpus.name;
    out.sample_seed = seed;
    if (n == corpus.size()) {
        out.statements = corpus.statements;
        return out;
    }
    std::vector<size_t> idx(corpus.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    for (size_t i = idx.size() - 1; i >= 1; --i) {
        size_t j = bounded_draw(rng, static_cast<std::uint32_t>(i + 1));
        std::swap(idx[i], idx[j]);
    }
    out.statements.reserve(n);
    for (size_t i = 0; i < n; ++i) out.statements.push_back(corpus.statements[idx[i]]);
    return out;
}

}  // namespace factsearch
