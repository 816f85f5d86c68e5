#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peerlabel/corpus.hpp"
#include "peerlabel/labeler.hpp"
#include "peerlabel/taxonomy.hpp"

namespace peerlabel {

enum class IssueKind {
  missing_comment,
  unknown_label,
  duplicate_pair,
  malformed_row,
  fuzzy_tie,
  extra_comment,
  na_conflict,  // N/A given alongside real topics; the N/A is dropped
};
std::string_view to_string(IssueKind kind);
IssueKind parse_issue_kind(std::string_view s);

struct ParseIssue {
  std::size_t batch_index = 0;
  IssueKind kind = IssueKind::malformed_row;
  std::string detail;
};

struct RawAssignment {
  std::size_t comment_id = 0;
  std::vector<std::string> raw_topics;  // never empty; may be {"N/A"}

  bool operator==(const RawAssignment&) const = default;
};

struct ParsedTable {
  std::vector<RawAssignment> rows;
  std::vector<ParseIssue> issues;
};

/// Splits a topic cell on commas, except where a canonical label that itself
/// contains a comma starts at the current position (longest match first).
std::vector<std::string> split_topics(std::string_view cell, const Taxonomy& taxonomy);

/// Total over arbitrary text. Accepts pipe-table rows and loose "id: topics"
/// lines; header, separator and code-fence lines are skipped; everything else
/// becomes a malformed_row issue.
ParsedTable parse_label_table(std::string_view response_text, const Taxonomy& taxonomy, std::size_t batch_index = 0);

struct LabelAssignment {
  std::string assignment_id;
  std::size_t comment_id = 0;
  std::optional<TaxonomyLabel> label;  // nullopt = not applicable
  std::string raw_label;
  MatchKind match_kind = MatchKind::unmatched;
  std::size_t batch_index = 0;

  bool not_applicable() const { return !label.has_value(); }
  bool operator==(const LabelAssignment&) const = default;
};

std::string make_assignment_id(std::size_t comment_id, const std::optional<TaxonomyLabel>& label);

struct ValidatedBatch {
  std::vector<LabelAssignment> assignments;
  std::vector<ParseIssue> issues;
};

/// Canonicalizes every raw topic against the taxonomy and reconciles the rows
/// with the batch. Coverage law:
///   |batch| = |distinct covered comment ids| + |missing_comment issues|.
ValidatedBatch validate(std::span<const RawAssignment> raw, const Batch& batch, const Taxonomy& taxonomy,
                        double fuzzy_threshold = kDefaultFuzzyThreshold);

// Delimited interchange table:
// assignment_id,comment_id,comment_text,label_id,raw_label,match_kind,batch_index
inline constexpr std::string_view kNotApplicableId = "N/A";
std::string assignments_to_csv(std::span<const LabelAssignment> assignments, const Corpus& corpus);
std::vector<LabelAssignment> assignments_from_csv(std::string_view content, const Taxonomy& taxonomy);

std::string issues_to_jsonl(std::span<const ParseIssue> issues);

}  // namespace peerlabel
