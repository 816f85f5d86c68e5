#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace peerlabel {

inline constexpr std::string_view kNamePlaceholder = "[NAME]";

struct Comment {
  std::size_t id = 0;  // dense 1..n within a corpus
  std::string text;
  bool redacted = false;
  std::string source_row;                 // "<file>:<line>" locator
  std::optional<std::string> origin_id;   // id supplied by the input file
  std::optional<std::size_t> sampled_from;  // id before sample() re-densified

  bool operator==(const Comment&) const = default;
};

struct SkippedRow {
  std::string source_row;
  std::string reason;

  bool operator==(const SkippedRow&) const = default;
};

struct Corpus {
  std::vector<Comment> comments;
  std::vector<SkippedRow> skipped;

  std::size_t size() const { return comments.size(); }
  const Comment* find(std::size_t id) const;

  bool operator==(const Corpus&) const = default;
};

struct CorpusError : std::runtime_error {
  std::optional<std::size_t> line;
  explicit CorpusError(const std::string& what, std::optional<std::size_t> line_ = std::nullopt)
      : std::runtime_error(what), line(line_) {}
};

enum class CorpusFormat {
  csv,        // header row with a comment/text column and optional id column
  tsv,        // same, tab-delimited
  jsonl,      // {"id"?: ..., "text": ...} per line
  canonical,  // the corpus file written by serialize_corpus
};

CorpusFormat parse_corpus_format(std::string_view name);
CorpusFormat guess_corpus_format(const std::filesystem::path& path);

Corpus parse_corpus(std::string_view content, CorpusFormat format, std::string_view source_name);
Corpus ingest(const std::filesystem::path& path, CorpusFormat format);

// Canonical line-delimited corpus: {id, text, redacted, source_row[, origin_id][, sampled_from]}.
std::string serialize_corpus(const Corpus& corpus);

struct Roster {
  std::vector<std::string> names;

  explicit Roster(std::vector<std::string> names_);
};

Roster load_roster(const std::filesystem::path& path);

/// Replaces whole-word, case-insensitive roster names with "[NAME]". A
/// trailing possessive ('s) is kept after the placeholder.
Comment redact(const Comment& comment, const Roster& roster);
Corpus redact(const Corpus& corpus, const Roster& roster);

/// Uniform sample without replacement, kept in corpus order and re-numbered
/// 1..n; the previous id is kept in sampled_from.
Corpus sample(const Corpus& corpus, std::size_t n, std::uint64_t seed);

}  // namespace peerlabel
