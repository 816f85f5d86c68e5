#include "peerlabel/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace peerlabel::text {

namespace {

constexpr std::array<std::string_view, 28> kStopwords = {
    "a",   "an",  "and", "are", "as",   "at",   "be",  "by",   "for", "from",
    "had", "has", "he",  "her", "his",  "in",   "is",  "it",   "of",  "on",
    "or",  "she", "the", "to",  "was",  "were", "with", "their"};

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  }
  return true;
}

bool istarts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::string fold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c == '\'') continue;
    // U+2019 right single quotation mark
    if (c == 0xE2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80 &&
        static_cast<unsigned char>(s[i + 2]) == 0x99) {
      i += 2;
      continue;
    }
    if (is_word_byte(c)) {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += static_cast<char>(std::tolower(c));
    } else {
      pending_space = true;
    }
  }
  return out;
}

std::vector<std::string> content_tokens(std::string_view s) {
  std::vector<std::string> tokens;
  for (auto& tok : split(fold(s), ' ')) {
    if (tok.empty()) continue;
    if (std::find(kStopwords.begin(), kStopwords.end(), tok) != kStopwords.end()) continue;
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

std::string slugify(std::string_view s) {
  std::string out;
  for (auto& tok : split(fold(s), ' ')) {
    if (tok.empty()) continue;
    if (!out.empty()) out += '-';
    for (char c : tok) {
      if (std::isalnum(static_cast<unsigned char>(c))) out += c;
    }
  }
  return out;
}

}  // namespace peerlabel::text
