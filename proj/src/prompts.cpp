#include "factsearch/prompts.hpp"

#include <set>

#include "factsearch/errors.hpp"
#include "factsearch/util.hpp"

namespace factsearch {

namespace detail {
const std::map<std::string, std::string>& embedded_templates();  // generated
}

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    lib.templates_ = detail::embedded_templates();
    return lib;
}

void PromptLibrary::load_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw ConfigError("templates directory not found: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::string content = read_file(entry.path());
        if (!content.empty() && content.back() == '\n') content.pop_back();
        templates_[entry.path().stem().string()] = std::move(content);
    }
}

const std::string& PromptLibrary::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError("unknown prompt template: " + name);
    return it->second;
}

const std::string& PromptLibrary::variant(const std::string& variant_id, bool search_mode) const {
    std::string name = (search_mode ? "search-" : "offline-") + variant_id;
    auto it = templates_.find(name);
    if (it == templates_.end())
        throw ConfigError("unknown prompt variant: " + variant_id +
                          (search_mode ? " (search mode)" : " (offline mode)"));
    return it->second;
}

std::vector<std::string> PromptLibrary::variant_ids() const {
    std::set<std::string> ids;
    for (const auto& [name, _] : templates_) {
        if (starts_with(name, "offline-")) ids.insert(name.substr(8));
        else if (starts_with(name, "search-")) ids.insert(name.substr(7));
    }
    return {ids.begin(), ids.end()};
}

}  // namespace factsearch
