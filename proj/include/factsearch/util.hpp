#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace factsearch {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);
std::vector<std::string> split(std::string_view s, char sep);

// Replaces every "{name}" placeholder by vars.at(name), verbatim. Placeholders
// without a binding are left untouched.
std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars);

// First integer (optional leading '-') found in the text, or nullopt.
std::optional<long> first_integer(std::string_view text);

std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);
// Writes via a temp file in the same directory, then renames into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void append_line(const std::filesystem::path& path, std::string_view line);

// RFC 4180-ish row parser, handles quoted fields with embedded commas/quotes.
std::vector<std::string> parse_csv_row(std::string_view line);
std::string csv_escape(std::string_view field);

std::string iso8601_now();

}  // namespace factsearch
