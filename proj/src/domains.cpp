#include "factsearch/domains.hpp"

#include <cctype>
#include <fstream>

#include "factsearch/errors.hpp"
#include "factsearch/util.hpp"

namespace factsearch {

std::optional<std::string> host_of_url(std::string_view url) {
    std::string_view rest = url;
    auto scheme_end = rest.find("://");
    if (scheme_end != std::string_view::npos) {
        // require a plausible scheme so "weird://x" still parses but ":// " noise does not
        bool scheme_ok = scheme_end > 0;
        for (size_t i = 0; i < scheme_end && scheme_ok; ++i) {
            char c = rest[i];
            scheme_ok = std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
        }
        if (!scheme_ok) return std::nullopt;
        rest = rest.substr(scheme_end + 3);
    }
    auto end = rest.find_first_of("/?#");
    std::string_view authority = end == std::string_view::npos ? rest : rest.substr(0, end);
    auto at = authority.rfind('@');
    if (at != std::string_view::npos) authority = authority.substr(at + 1);
    auto colon = authority.find(':');
    if (colon != std::string_view::npos) authority = authority.substr(0, colon);
    if (authority.empty()) return std::nullopt;
    std::string host = to_lower(trim(authority));
    if (host.empty() || host.front() == '.' || host.back() == '.') return std::nullopt;
    if (host.find('.') == std::string::npos) return std::nullopt;
    for (char c : host)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-')) return std::nullopt;
    return host;
}

std::string normalize_domain(std::string_view host_or_url) {
    std::string host;
    if (auto h = host_of_url(host_or_url))
        host = *h;
    else
        host = to_lower(trim(host_or_url));
    while (starts_with(host, "www.")) host = host.substr(4);
    return host;
}

bool host_matches_domain(std::string_view host, std::string_view domain) {
    std::string h = normalize_domain(host);
    std::string d = normalize_domain(domain);
    if (h == d) return true;
    return h.size() > d.size() && ends_with(h, d) && h[h.size() - d.size() - 1] == '.';
}

bool host_blocked(std::string_view host, const std::set<std::string>& blocked_domains) {
    for (const auto& d : blocked_domains)
        if (host_matches_domain(host, d)) return true;
    return false;
}

PublicSuffixList PublicSuffixList::builtin() {
    // Trimmed from the public suffix list: generic TLDs plus the multi-label
    // suffixes most common in news/government sources. data/public_suffix_list.dat
    // ships the same set; pass a fuller list via load() when coverage matters.
    static const char* kSuffixes[] = {
        "com", "org", "net", "edu", "gov", "mil", "int", "info", "biz", "name", "io", "co",
        "us", "uk", "ca", "au", "de", "fr", "jp", "cn", "in", "ru", "br", "mx", "es", "it",
        "nl", "se", "no", "ch", "at", "be", "dk", "fi", "ie", "nz", "pl", "pt", "gr", "cz",
        "kr", "tw", "za", "ar", "cl", "il", "tr", "ua", "eu", "tv", "me", "fm", "ai", "app",
        "dev", "news", "blog", "site", "online", "press", "media",
        "co.uk", "org.uk", "ac.uk", "gov.uk", "me.uk", "net.uk", "ltd.uk", "plc.uk",
        "com.au", "net.au", "org.au", "edu.au", "gov.au", "id.au",
        "co.jp", "or.jp", "ne.jp", "ac.jp", "go.jp",
        "com.cn", "net.cn", "org.cn", "gov.cn", "edu.cn",
        "co.in", "net.in", "org.in", "gov.in", "ac.in",
        "com.br", "net.br", "org.br", "gov.br",
        "com.mx", "org.mx", "gob.mx",
        "co.nz", "org.nz", "net.nz", "govt.nz",
        "co.za", "org.za", "gov.za",
        "co.kr", "or.kr", "go.kr",
        "com.ar", "com.tr", "com.ua", "com.tw", "org.tw",
        "co.il", "org.il", "gov.il",
        "gc.ca", "qc.ca", "on.ca", "bc.ca",
    };
    PublicSuffixList psl;
    for (const char* s : kSuffixes) psl.suffixes_.insert(s);
    return psl;
}

PublicSuffixList PublicSuffixList::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open public suffix list: " + path.string());
    PublicSuffixList psl;
    std::string line;
    while (std::getline(in, line)) {
        std::string s = trim(line);
        if (s.empty() || starts_with(s, "#") || starts_with(s, "//")) continue;
        psl.suffixes_.insert(to_lower(s));
    }
    return psl;
}

std::string PublicSuffixList::registered_domain(std::string_view host) const {
    std::string h = normalize_domain(host);
    auto labels = split(h, '.');
    if (labels.size() <= 2) return h;
    // longest suffix rule wins
    for (size_t start = 1; start < labels.size(); ++start) {
        std::string suffix;
        for (size_t i = start; i < labels.size(); ++i) {
            if (!suffix.empty()) suffix += '.';
            suffix += labels[i];
        }
        if (suffixes_.count(suffix)) return labels[start - 1] + "." + suffix;
    }
    return labels[labels.size() - 2] + "." + labels[labels.size() - 1];
}

}  // namespace factsearch
