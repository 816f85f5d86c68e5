#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace peerlabel::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);  // ASCII only; UTF-8 bytes pass through
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Lowercases, drops apostrophes, maps other ASCII punctuation to spaces and
// collapses whitespace runs.
std::string fold(std::string_view s);

// Content tokens of fold(s), with a small English stopword list removed.
std::vector<std::string> content_tokens(std::string_view s);

// Slug made of lowercase ASCII alphanumerics joined by '-'.
std::string slugify(std::string_view s);

bool is_word_byte(unsigned char c);

}  // namespace peerlabel::text
