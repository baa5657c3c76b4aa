#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace factsearch {

// Lowercased host of a URL with userinfo/port stripped, or nullopt when no
// plausible host is present. Scheme-less inputs are treated as starting with
// the host ("politifact.com/article" works).
std::optional<std::string> host_of_url(std::string_view url);

// Canonical domain used for counting and blocklists: lowercased host with
// every leading "www." label removed. Idempotent.
std::string normalize_domain(std::string_view host_or_url);

// True when host equals `domain` or is a subdomain of it (label boundary:
// "www.politifact.com" is blocked by "politifact.com", "notpolitifact.com"
// is not). Both sides are normalized first.
bool host_matches_domain(std::string_view host, std::string_view domain);
bool host_blocked(std::string_view host, const std::set<std::string>& blocked_domains);

// Public-suffix rules: plain suffixes, one per line, '#' comments. The
// registered domain is the longest matching suffix plus one label; hosts
// matching no rule fall back to their last two labels.
class PublicSuffixList {
public:
    static PublicSuffixList builtin();
    static PublicSuffixList load(const std::filesystem::path& path);

    std::string registered_domain(std::string_view host) const;

private:
    std::set<std::string, std::less<>> suffixes_;
};

}  // namespace factsearch
