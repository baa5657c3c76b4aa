#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace factsearch {

enum class RawLabel { pants_fire, false_, barely_true, half_true, mostly_true, true_ };
enum class Possibility { possible, hard, impossible };
enum class MissingInfo { speaker, location, textual_evidence, non_textual_evidence, date, none };

struct Statement {
    std::string id;
    std::string text;
    std::optional<RawLabel> raw_label;
    int label = 0;  // binary, 0 or 1
    std::optional<Possibility> possibility;
    std::optional<MissingInfo> missing_info;
    std::optional<std::string> language;
};

struct Corpus {
    std::string name;
    std::vector<Statement> statements;
    std::optional<std::uint64_t> sample_seed;

    size_t size() const { return statements.size(); }
    // {count of label 0, count of label 1}
    std::pair<size_t, size_t> label_counts() const;
};

// Accepts the six levels case-insensitively, with ' ', '_' and '-' treated as
// the same separator ("Pants-Fire", "pants_fire", "barely true" all parse).
RawLabel parse_raw_label(std::string_view raw);
std::string to_string(RawLabel l);
Possibility parse_possibility(std::string_view s);
std::string to_string(Possibility p);
MissingInfo parse_missing_info(std::string_view s);
std::string to_string(MissingInfo m);

// half-true / mostly-true / true -> 1; false / barely-true / pants-fire -> 0.
int binarize_label(RawLabel raw);
int binarize_label(std::string_view raw);

enum class CorpusFormat { jsonl, csv };

// jsonl: one JSON object per line with fields id, text, raw_label or label,
// and optional possibility, missing_info, language.
// csv: header row naming any subset of the same fields; id and text required.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format = CorpusFormat::jsonl);

// Seeded shuffle (Fisher-Yates over mt19937, see docs/formats.md) followed by
// a prefix take. n == corpus size returns the corpus unchanged.
Corpus subsample(const Corpus& corpus, size_t n, std::uint64_t seed);

}  // namespace factsearch
