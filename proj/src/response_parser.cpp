#include "peerlabel/response_parser.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <regex>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "peerlabel/csv.hpp"
#include "peerlabel/text.hpp"

namespace peerlabel {

namespace {

std::string_view strip_markup(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && (s.front() == '*' || s.front() == '`' || s.front() == '_')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == '*' || s.back() == '`' || s.back() == '_')) s.remove_suffix(1);
  return text::trim(s);
}

std::optional<std::size_t> parse_digits(std::string_view s, std::size_t& consumed) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr == s.data()) return std::nullopt;
  consumed = static_cast<std::size_t>(ptr - s.data());
  return value;
}

// "[12]", "12", "[12", "12]", "#12", "[12] echoed comment text".
std::optional<std::size_t> parse_id_cell(std::string_view cell) {
  auto s = strip_markup(cell);
  if (!s.empty() && s.front() == '#') s.remove_prefix(1);
  std::size_t used = 0;
  if (!s.empty() && s.front() == '[') {
    s.remove_prefix(1);
    s = text::trim(s);
    auto id = parse_digits(s, used);
    if (!id) return std::nullopt;
    return id;
  }
  auto id = parse_digits(s, used);
  if (!id) return std::nullopt;
  auto rest = text::trim(s.substr(used));
  if (rest.empty() || rest == "]" || rest == "." || rest == ":") return id;
  return std::nullopt;
}

bool is_separator_row(const std::vector<std::string>& cells) {
  bool any = false;
  for (const auto& c : cells) {
    const auto t = text::trim(c);
    if (t.empty()) continue;
    if (t.find_first_not_of(":- ") != std::string_view::npos) return false;
    any = true;
  }
  return any;
}

bool looks_like_header(const std::vector<std::string>& cells) {
  for (const auto& c : cells) {
    const auto lower = text::to_lower(c);
    if (lower.find_first_of("0123456789") != std::string::npos) return false;
  }
  for (const auto& c : cells) {
    const auto lower = text::to_lower(c);
    if (lower.find("id") != std::string::npos || lower.find("topic") != std::string::npos ||
        lower.find("comment") != std::string::npos || lower.find("label") != std::string::npos)
      return true;
  }
  return false;
}

std::vector<std::string> split_pipe_row(std::string_view line) {
  auto cells = text::split(line, '|');
  for (auto& c : cells) c = std::string(text::trim(c));
  if (!cells.empty() && cells.front().empty()) cells.erase(cells.begin());
  if (!cells.empty() && cells.back().empty()) cells.pop_back();
  return cells;
}

std::string clean_topic(std::string_view t) {
  for (std::string_view prev; prev != t;) {
    prev = t;
    t = strip_markup(t);
    while (!t.empty() && (t.back() == '.' || t.back() == ';') && !text::iequals(t, "N/A.")) t.remove_suffix(1);
    if (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') || (t.front() == '\'' && t.back() == '\''))) {
      t = t.substr(1, t.size() - 2);
    }
  }
  return std::string(text::trim(t));
}

std::string issue_detail_line(std::size_t line_no, std::string_view line) {
  constexpr std::size_t kMax = 80;
  std::string shown(line.substr(0, kMax));
  if (line.size() > kMax) shown += "...";
  return "line " + std::to_string(line_no) + ": " + shown;
}

const std::regex& bracketed_line() {
  static const std::regex re(R"(^(?:[-*+]\s+)?\**\[\s*(\d+)\s*\]\**\s*(?::|-|–|—)?\s*(\S.*)$)");
  return re;
}

const std::regex& bare_line() {
  static const std::regex re(R"(^(?:[-*+]\s+)?\**(\d+)\**\s*(?::|-|\.|\)|–|—)\s*(\S.*)$)");
  return re;
}

}  // namespace

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::missing_comment: return "missing_comment";
    case IssueKind::unknown_label: return "unknown_label";
    case IssueKind::duplicate_pair: return "duplicate_pair";
    case IssueKind::malformed_row: return "malformed_row";
    case IssueKind::fuzzy_tie: return "fuzzy_tie";
    case IssueKind::extra_comment: return "extra_comment";
    case IssueKind::na_conflict: return "na_conflict";
  }
  return "malformed_row";
}

IssueKind parse_issue_kind(std::string_view s) {
  for (auto k : {IssueKind::missing_comment, IssueKind::unknown_label, IssueKind::duplicate_pair,
                 IssueKind::malformed_row, IssueKind::fuzzy_tie, IssueKind::extra_comment, IssueKind::na_conflict}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown issue kind: " + std::string(s));
}

std::vector<std::string> split_topics(std::string_view cell, const Taxonomy& taxonomy) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < cell.size()) {
    while (pos < cell.size() && (cell[pos] == ' ' || cell[pos] == '\t')) ++pos;
    if (pos >= cell.size()) break;
    const auto rest = cell.substr(pos);
    std::size_t take = 0;
    for (const auto& label : taxonomy.labels()) {
      if (label.text.find(',') == std::string::npos || label.text.size() <= take) continue;
      if (!text::istarts_with(rest, label.text)) continue;
      const auto after = text::trim(rest.substr(label.text.size()));
      const auto tail = rest.substr(label.text.size());
      const auto next = tail.find_first_not_of(" \t.");
      if (after.empty() || (next != std::string_view::npos && tail[next] == ',')) take = label.text.size();
    }
    std::size_t piece_end;
    std::size_t resume;
    if (take > 0) {
      piece_end = take;
      const auto comma = rest.find(',', take);
      resume = comma == std::string_view::npos ? rest.size() : comma + 1;
    } else {
      const auto comma = rest.find(',');
      piece_end = comma == std::string_view::npos ? rest.size() : comma;
      resume = comma == std::string_view::npos ? rest.size() : comma + 1;
    }
    auto piece = clean_topic(rest.substr(0, piece_end));
    if (!piece.empty()) out.push_back(std::move(piece));
    pos += resume;
  }
  return out;
}

ParsedTable parse_label_table(std::string_view response_text, const Taxonomy& taxonomy, std::size_t batch_index) {
  ParsedTable result;
  std::size_t line_no = 0;
  for (const auto& raw_line : text::split(response_text, '\n')) {
    ++line_no;
    const auto line = text::trim(raw_line);
    if (line.empty() || line.substr(0, 3) == "```") continue;

    auto malformed = [&](std::string_view why) {
      result.issues.push_back(ParseIssue{batch_index, IssueKind::malformed_row,
                                         std::string(why) + " (" + issue_detail_line(line_no, line) + ")"});
    };

    if (line.find('|') != std::string_view::npos) {
      const auto cells = split_pipe_row(line);
      if (cells.empty() || is_separator_row(cells)) continue;
      const auto id = parse_id_cell(cells.front());
      if (!id) {
        if (looks_like_header(cells)) continue;
        malformed("no comment id");
        continue;
      }
      std::string_view topic_cell;
      for (std::size_t i = cells.size(); i-- > 1;) {
        if (!text::trim(cells[i]).empty()) {
          topic_cell = cells[i];
          break;
        }
      }
      auto topics = split_topics(topic_cell, taxonomy);
      if (topics.empty()) {
        malformed("no topic");
        continue;
      }
      result.rows.push_back(RawAssignment{*id, std::move(topics)});
      continue;
    }

    const std::string owned(line);
    std::smatch m;
    if (std::regex_match(owned, m, bracketed_line()) || std::regex_match(owned, m, bare_line())) {
      std::size_t used = 0;
      const auto id = parse_digits(m[1].str(), used);
      auto topics = split_topics(m[2].str(), taxonomy);
      if (id && !topics.empty()) {
        result.rows.push_back(RawAssignment{*id, std::move(topics)});
        continue;
      }
    }
    malformed("unrecognized row");
  }
  return result;
}

std::string make_assignment_id(std::size_t comment_id, const std::optional<TaxonomyLabel>& label) {
  return "c" + std::to_string(comment_id) + ":" + (label ? label->id : std::string("n-a"));
}

ValidatedBatch validate(std::span<const RawAssignment> raw, const Batch& batch, const Taxonomy& taxonomy,
                        double fuzzy_threshold) {
  ValidatedBatch out;
  const auto bi = batch.index;
  std::map<std::size_t, std::size_t> position;  // comment id -> order in batch
  for (std::size_t i = 0; i < batch.comments.size(); ++i) position.emplace(batch.comments[i].id, i);

  std::set<std::string> seen;
  std::set<std::size_t> had_row;
  for (const auto& row : raw) {
    if (!position.count(row.comment_id)) {
      out.issues.push_back(ParseIssue{bi, IssueKind::extra_comment,
                                      "comment " + std::to_string(row.comment_id) + " is not in batch " +
                                          std::to_string(bi)});
      continue;
    }
    had_row.insert(row.comment_id);
    for (const auto& topic : row.raw_topics) {
      auto match = canonicalize(topic, taxonomy, fuzzy_threshold);
      if (match.kind == MatchKind::unmatched) {
        out.issues.push_back(ParseIssue{bi, IssueKind::unknown_label,
                                        "comment " + std::to_string(row.comment_id) + ": '" + topic + "'"});
        continue;
      }
      if (!match.tied_with.empty()) {
        out.issues.push_back(ParseIssue{bi, IssueKind::fuzzy_tie,
                                        "'" + topic + "' ties " + match.label->id + " with " +
                                            text::join(match.tied_with, ", ")});
      }
      auto id = make_assignment_id(row.comment_id, match.label);
      if (!seen.insert(id).second) {
        out.issues.push_back(ParseIssue{bi, IssueKind::duplicate_pair, id + " from '" + topic + "'"});
        continue;
      }
      out.assignments.push_back(
          LabelAssignment{std::move(id), row.comment_id, match.label, topic, match.kind, bi});
    }
  }

  // Real topics win over N/A for the same comment.
  std::set<std::size_t> has_real;
  for (const auto& a : out.assignments) {
    if (!a.not_applicable()) has_real.insert(a.comment_id);
  }
  std::erase_if(out.assignments, [&](const LabelAssignment& a) {
    if (a.not_applicable() && has_real.count(a.comment_id)) {
      out.issues.push_back(ParseIssue{bi, IssueKind::na_conflict,
                                      "comment " + std::to_string(a.comment_id) + ": N/A dropped"});
      return true;
    }
    return false;
  });

  std::stable_sort(out.assignments.begin(), out.assignments.end(), [&](const auto& a, const auto& b) {
    return position.at(a.comment_id) < position.at(b.comment_id);
  });

  std::set<std::size_t> covered;
  for (const auto& a : out.assignments) covered.insert(a.comment_id);
  for (const auto& c : batch.comments) {
    if (covered.count(c.id)) continue;
    out.issues.push_back(ParseIssue{bi, IssueKind::missing_comment,
                                    "comment " + std::to_string(c.id) +
                                        (had_row.count(c.id) ? ": no valid topics" : ": no row")});
  }
  return out;
}

std::string assignments_to_csv(std::span<const LabelAssignment> assignments, const Corpus& corpus) {
  std::string out = csv::format_row(
      {"assignment_id", "comment_id", "comment_text", "label_id", "raw_label", "match_kind", "batch_index"});
  for (const auto& a : assignments) {
    const auto* c = corpus.find(a.comment_id);
    out += csv::format_row({a.assignment_id, std::to_string(a.comment_id), c ? c->text : std::string(),
                            a.label ? a.label->id : std::string(kNotApplicableId), a.raw_label,
                            std::string(to_string(a.match_kind)), std::to_string(a.batch_index)});
  }
  return out;
}

std::vector<LabelAssignment> assignments_from_csv(std::string_view content, const Taxonomy& taxonomy) {
  const auto rows = csv::parse(content);
  std::vector<LabelAssignment> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r].cells;
    if (cells.size() != 7) throw std::runtime_error("assignments row " + std::to_string(rows[r].line) + ": expected 7 cells");
    LabelAssignment a;
    a.assignment_id = cells[0];
    a.comment_id = std::stoul(cells[1]);
    if (cells[3] != kNotApplicableId) {
      const auto* label = taxonomy.find_by_id(cells[3]);
      if (!label) throw std::runtime_error("assignments row " + std::to_string(rows[r].line) + ": unknown label id " + cells[3]);
      a.label = *label;
    }
    a.raw_label = cells[4];
    a.match_kind = parse_match_kind(cells[5]);
    a.batch_index = std::stoul(cells[6]);
    out.push_back(std::move(a));
  }
  return out;
}

std::string issues_to_jsonl(std::span<const ParseIssue> issues) {
  std::string out;
  for (const auto& i : issues) {
    nlohmann::ordered_json j;
    j["batch_index"] = i.batch_index;
    j["kind"] = to_string(i.kind);
    j["detail"] = i.detail;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace peerlabel
