#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace factsearch {

// Prompt texts keyed by name. Agent task prompts are stored as
// "offline-<variant>" / "search-<variant>" pairs; fixed machine prompts
// (summarizer, RAG lookup, confidence elicitation, bias scoring) under their
// own names. The builtin() set is embedded from templates/ at build time;
// load_directory() adds or overrides entries from *.txt files so prompt
// sweeps need no rebuild.
class PromptLibrary {
public:
    static PromptLibrary builtin();

    void load_directory(const std::filesystem::path& dir);

    bool has(const std::string& name) const { return templates_.count(name) > 0; }
    // Throws ConfigError when the name is unknown.
    const std::string& get(const std::string& name) const;

    // Agent task prompt for a variant id ("default", "paraphrase-1", ...).
    const std::string& variant(const std::string& variant_id, bool search_mode) const;
    std::vector<std::string> variant_ids() const;

    const std::map<std::string, std::string>& all() const { return templates_; }

private:
    std::map<std::string, std::string> templates_;
};

}  // namespace factsearch
