#include "peerlabel/corpus.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "peerlabel/csv.hpp"
#include "peerlabel/hash.hpp"
#include "peerlabel/rng.hpp"
#include "peerlabel/text.hpp"

namespace peerlabel {

namespace {

std::string locator(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

std::optional<std::size_t> find_column(const std::vector<std::string>& header, std::initializer_list<std::string_view> names) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    for (auto name : names) {
      if (text::iequals(text::trim(header[i]), name)) return i;
    }
  }
  return std::nullopt;
}

class CorpusBuilder {
 public:
  explicit CorpusBuilder(std::string_view source) : source_(source) {}

  void add(std::string_view raw_text, std::size_t line, std::optional<std::string> origin_id) {
    if (origin_id) {
      if (origin_id->empty()) origin_id.reset();
      else if (!seen_ids_.insert(*origin_id).second)
        throw CorpusError("duplicate id '" + *origin_id + "' at line " + std::to_string(line), line);
    }
    const auto body = text::trim(raw_text);
    if (body.empty()) {
      corpus_.skipped.push_back(SkippedRow{locator(source_, line), "empty comment"});
      return;
    }
    Comment c;
    c.id = corpus_.comments.size() + 1;
    c.text = std::string(body);
    c.source_row = locator(source_, line);
    c.origin_id = std::move(origin_id);
    corpus_.comments.push_back(std::move(c));
  }

  Corpus finish() { return std::move(corpus_); }

 private:
  std::string source_;
  Corpus corpus_;
  std::set<std::string> seen_ids_;
};

std::string json_scalar_to_string(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw CorpusError("id must be a string or integer");
}

Corpus parse_delimited(std::string_view content, char delimiter, std::string_view source) {
  std::vector<csv::Row> rows;
  try {
    rows = csv::parse(content, delimiter);
  } catch (const csv::CsvError& e) {
    throw CorpusError("malformed row at line " + std::to_string(e.line) + ": " + e.what(), e.line);
  }
  if (rows.empty()) throw CorpusError("missing header row");
  const auto& header = rows.front().cells;
  const auto text_col = find_column(header, {"comment", "text"});
  if (!text_col) throw CorpusError("header has no 'comment' or 'text' column", rows.front().line);
  const auto id_col = find_column(header, {"id"});

  CorpusBuilder builder(source);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.cells.size() != header.size()) {
      throw CorpusError("malformed row at line " + std::to_string(row.line) + ": expected " +
                            std::to_string(header.size()) + " cells, got " + std::to_string(row.cells.size()),
                        row.line);
    }
    std::optional<std::string> origin;
    if (id_col) origin = std::string(text::trim(row.cells[*id_col]));
    builder.add(row.cells[*text_col], row.line, std::move(origin));
  }
  return builder.finish();
}

Corpus parse_jsonl(std::string_view content, std::string_view source) {
  CorpusBuilder builder(source);
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, '\n')) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(trimmed);
      if (!j.is_object() || !j.contains("text") || !j.at("text").is_string())
        throw CorpusError("record has no string 'text'");
      std::optional<std::string> origin;
      if (j.contains("id") && !j.at("id").is_null()) origin = json_scalar_to_string(j.at("id"));
      builder.add(j.at("text").get<std::string>(), line_no, std::move(origin));
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError("malformed row at line " + std::to_string(line_no) + ": " + e.what(), line_no);
    } catch (const CorpusError& e) {
      if (e.line) throw;
      throw CorpusError("malformed row at line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return builder.finish();
}

Corpus parse_canonical(std::string_view content) {
  Corpus corpus;
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, '\n')) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(trimmed);
      if (j.contains("skipped")) {
        corpus.skipped.push_back(SkippedRow{j.at("skipped").get<std::string>(), j.at("reason").get<std::string>()});
        continue;
      }
      Comment c;
      c.id = j.at("id").get<std::size_t>();
      c.text = j.at("text").get<std::string>();
      c.redacted = j.at("redacted").get<bool>();
      c.source_row = j.at("source_row").get<std::string>();
      if (j.contains("origin_id")) c.origin_id = j.at("origin_id").get<std::string>();
      if (j.contains("sampled_from")) c.sampled_from = j.at("sampled_from").get<std::size_t>();
      if (c.id != corpus.comments.size() + 1)
        throw CorpusError("ids must be dense and ascending from 1", line_no);
      if (text::trim(c.text).empty()) throw CorpusError("empty comment text", line_no);
      corpus.comments.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError("malformed row at line " + std::to_string(line_no) + ": " + e.what(), line_no);
    } catch (const CorpusError& e) {
      throw CorpusError("malformed row at line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return corpus;
}

// Length in bytes of an apostrophe at s[i] (ASCII ' or U+2019), else 0.
std::size_t apostrophe_at(std::string_view s, std::size_t i) {
  if (i < s.size() && s[i] == '\'') return 1;
  if (i + 3 <= s.size() && s.substr(i, 3) == "\xE2\x80\x99") return 3;
  return 0;
}

bool word_ends_at(std::string_view s, std::size_t i) {
  return i >= s.size() || !text::is_word_byte(static_cast<unsigned char>(s[i])) || apostrophe_at(s, i) > 0;
}

}  // namespace

const Comment* Corpus::find(std::size_t id) const {
  if (id == 0 || id > comments.size()) return nullptr;
  const auto& c = comments[id - 1];
  return c.id == id ? &c : nullptr;
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (text::iequals(name, "csv")) return CorpusFormat::csv;
  if (text::iequals(name, "tsv")) return CorpusFormat::tsv;
  if (text::iequals(name, "jsonl")) return CorpusFormat::jsonl;
  if (text::iequals(name, "canonical")) return CorpusFormat::canonical;
  throw CorpusError("unknown corpus format: " + std::string(name));
}

CorpusFormat guess_corpus_format(const std::filesystem::path& path) {
  const auto ext = text::to_lower(path.extension().string());
  if (ext == ".tsv" || ext == ".tab") return CorpusFormat::tsv;
  if (ext == ".jsonl" || ext == ".ndjson") return CorpusFormat::jsonl;
  return CorpusFormat::csv;
}

Corpus parse_corpus(std::string_view content, CorpusFormat format, std::string_view source_name) {
  switch (format) {
    case CorpusFormat::csv: return parse_delimited(content, ',', source_name);
    case CorpusFormat::tsv: return parse_delimited(content, '\t', source_name);
    case CorpusFormat::jsonl: return parse_jsonl(content, source_name);
    case CorpusFormat::canonical: return parse_canonical(content);
  }
  throw CorpusError("unsupported format");
}

Corpus ingest(const std::filesystem::path& path, CorpusFormat format) {
  std::string content;
  try {
    content = read_file(path);
  } catch (const std::exception& e) {
    throw CorpusError(e.what());
  }
  return parse_corpus(content, format, path.filename().string());
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& c : corpus.comments) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["text"] = c.text;
    j["redacted"] = c.redacted;
    j["source_row"] = c.source_row;
    if (c.origin_id) j["origin_id"] = *c.origin_id;
    if (c.sampled_from) j["sampled_from"] = *c.sampled_from;
    out += j.dump() + "\n";
  }
  for (const auto& s : corpus.skipped) {
    nlohmann::ordered_json j;
    j["skipped"] = s.source_row;
    j["reason"] = s.reason;
    out += j.dump() + "\n";
  }
  return out;
}

Roster::Roster(std::vector<std::string> names_) {
  for (auto& n : names_) {
    auto t = std::string(text::trim(n));
    if (t.empty()) throw CorpusError("roster names must be non-empty");
    names.push_back(std::move(t));
  }
  // Longest first so "Mary Ann" wins over "Mary".
  std::stable_sort(names.begin(), names.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
}

Roster load_roster(const std::filesystem::path& path) {
  std::vector<std::string> names;
  for (const auto& line : text::split(read_file(path), '\n')) {
    const auto t = text::trim(line);
    if (!t.empty() && t.front() != '#') names.emplace_back(t);
  }
  return Roster(std::move(names));
}

Comment redact(const Comment& comment, const Roster& roster) {
  const std::string_view s = comment.text;
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s.substr(i, kNamePlaceholder.size()) == kNamePlaceholder) {
      out += kNamePlaceholder;
      i += kNamePlaceholder.size();
      continue;
    }
    const bool at_word_start = i == 0 || !text::is_word_byte(static_cast<unsigned char>(s[i - 1])) ||
                               (i >= 3 && apostrophe_at(s, i - 3) == 3);
    bool replaced = false;
    if (at_word_start && text::is_word_byte(static_cast<unsigned char>(s[i]))) {
      for (const auto& name : roster.names) {
        if (text::istarts_with(s.substr(i), name) && word_ends_at(s, i + name.size())) {
          out += kNamePlaceholder;
          i += name.size();
          replaced = true;
          break;
        }
      }
    }
    if (replaced) continue;
    // Copy the rest of the current word (or one separator byte).
    if (text::is_word_byte(static_cast<unsigned char>(s[i])) && apostrophe_at(s, i) == 0) {
      while (i < s.size() && text::is_word_byte(static_cast<unsigned char>(s[i])) && apostrophe_at(s, i) == 0) out += s[i++];
    } else {
      const auto n = std::max<std::size_t>(1, apostrophe_at(s, i));
      out += s.substr(i, n);
      i += n;
    }
  }
  Comment result = comment;
  result.text = std::move(out);
  result.redacted = true;
  return result;
}

Corpus redact(const Corpus& corpus, const Roster& roster) {
  Corpus out = corpus;
  for (auto& c : out.comments) c = redact(c, roster);
  return out;
}

Corpus sample(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  const std::size_t total = corpus.comments.size();
  if (n > total) {
    throw CorpusError("sample size " + std::to_string(n) + " exceeds corpus size " + std::to_string(total));
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_below(rng, total - i));
    std::swap(order[i], order[j]);
  }
  order.resize(n);
  std::sort(order.begin(), order.end());

  Corpus out;
  out.skipped = corpus.skipped;
  for (std::size_t k = 0; k < n; ++k) {
    Comment c = corpus.comments[order[k]];
    c.sampled_from = c.id;
    c.id = k + 1;
    out.comments.push_back(std::move(c));
  }
  return out;
}

}  // namespace peerlabel
