#include <doctest.h>

#include "factsearch/domains.hpp"
#include "support/fixtures.hpp"

using namespace factsearch;

TEST_CASE("host_of_url extracts hosts") {
    CHECK(host_of_url("https://www.usatoday.com/story/x") == "www.usatoday.com");
    CHECK(host_of_url("http://EN.Wikipedia.org") == "en.wikipedia.org");
    CHECK(host_of_url("https://user:pw@example.com:8443/a?b#c") == "example.com");
    CHECK(host_of_url("politifact.com/factchecks/2023/") == "politifact.com");
    CHECK_FALSE(host_of_url("").has_value());
    CHECK_FALSE(host_of_url("not a url at all").has_value());
    CHECK_FALSE(host_of_url("https:///nopath").has_value());
    CHECK_FALSE(host_of_url("http://localhost/x").has_value());  // no dot, not countable
}

TEST_CASE("normalize_domain strips scheme and www") {
    CHECK(normalize_domain("https://www.usatoday.com/x") == "usatoday.com");
    CHECK(normalize_domain("en.wikipedia.org") == "en.wikipedia.org");
    CHECK(normalize_domain("WWW.POLITIFACT.COM") == "politifact.com");
    CHECK(normalize_domain("www.www.example.com") == "example.com");
}

TEST_CASE("normalize_domain is idempotent") {
    for (const char* u : {"https://www.usatoday.com/x", "en.wikipedia.org", "www.a.b.co.uk",
                          "http://user@www.news.example.org:80/p?q"}) {
        std::string once = normalize_domain(u);
        CHECK(normalize_domain(once) == once);
    }
}

TEST_CASE("domain blocking matches at label boundaries") {
    std::set<std::string> blocked{"politifact.com"};
    CHECK(host_blocked("politifact.com", blocked));
    CHECK(host_blocked("www.politifact.com", blocked));
    CHECK(host_blocked("static.politifact.com", blocked));
    CHECK_FALSE(host_blocked("notpolitifact.com", blocked));
    CHECK_FALSE(host_blocked("politifact.com.evil.net", blocked));
    CHECK_FALSE(host_blocked("reuters.com", blocked));
}

TEST_CASE("registered_domain uses suffix rules with last-two-label fallback") {
    PublicSuffixList psl = PublicSuffixList::builtin();
    CHECK(psl.registered_domain("en.wikipedia.org") == "wikipedia.org");
    CHECK(psl.registered_domain("www.usatoday.com") == "usatoday.com");
    CHECK(psl.registered_domain("news.bbc.co.uk") == "bbc.co.uk");
    CHECK(psl.registered_domain("a.b.gov.au") == "b.gov.au");
    CHECK(psl.registered_domain("plain.unknowntld") == "plain.unknowntld");
    CHECK(psl.registered_domain("deep.sub.example.unknowntld") == "example.unknowntld");
}

TEST_CASE("public suffix list file matches the builtin rules") {
    PublicSuffixList from_file =
        PublicSuffixList::load(std::filesystem::path(FACTSEARCH_REPO_ROOT) / "data" /
                               "public_suffix_list.dat");
    PublicSuffixList builtin = PublicSuffixList::builtin();
    for (const char* host : {"en.wikipedia.org", "news.bbc.co.uk", "a.b.gov.au", "x.y.com.br",
                             "sub.site.co.jp", "deep.example.io"}) {
        CHECK(from_file.registered_domain(host) == builtin.registered_domain(host));
    }
}
