#pragma once

#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "peerlabel/corpus.hpp"
#include "peerlabel/labeler.hpp"
#include "peerlabel/response_parser.hpp"

namespace peerlabel {

// Ordered: inaccurate < uncertain < accurate.
enum class Band { inaccurate = 0, uncertain = 1, accurate = 2 };
std::string_view to_string(Band band);
Band parse_band(std::string_view s);

/// 1-3 inaccurate, 4-7 uncertain, 8-10 accurate.
Band band_of(int rating);

struct AccuracyCheck {
  std::string assignment_id;
  int rating = 0;
  Band band = Band::inaccurate;
  std::string raw_response;
  bool lenient = false;  // rating was dug out of chatty text

  bool operator==(const AccuracyCheck&) const = default;
};

PromptMessage build_accuracy_prompt(std::string_view label_text, std::string_view comment_text);

enum class RatingErrorKind { no_rating_found, out_of_range };

struct RatingError : std::runtime_error {
  RatingErrorKind kind;
  RatingError(RatingErrorKind kind_, const std::string& what) : std::runtime_error(what), kind(kind_) {}
};

struct ParsedRating {
  int rating = 0;
  bool lenient = false;
};

/// Bare integer (whitespace allowed), else the first integer token of chatty
/// text (lenient). Throws RatingError.
ParsedRating parse_rating(std::string_view text);

struct VerificationFailure {
  std::string assignment_id;
  std::string message;
};

struct VerificationRun {
  std::vector<AccuracyCheck> checks;           // in assignment order
  std::vector<std::string> skipped;            // not-applicable assignment ids
  std::vector<VerificationFailure> failures;   // provider or parse errors
  std::vector<std::string> lenient;            // ids whose rating needed leniency
};

/// One single-pair prompt per labelled assignment. Assignments are not
/// modified; per-item failures never abort the run.
VerificationRun run_verification(std::span<const LabelAssignment> assignments, const Corpus& corpus,
                                 Provider& provider, const ProviderConfig& config, RateLimiter* limiter = nullptr);

struct FlagPolicy {
  std::set<Band> flag_bands{Band::inaccurate, Band::uncertain};

  explicit FlagPolicy(std::set<Band> bands = {Band::inaccurate, Band::uncertain});
};

FlagPolicy parse_flag_policy(std::string_view comma_separated);
std::string format_flag_policy(const FlagPolicy& policy);

struct ReviewQueueEntry {
  std::string assignment_id;
  int rating = 0;
  Band band = Band::inaccurate;

  bool operator==(const ReviewQueueEntry&) const = default;
};

/// Checks whose band is flagged, worst rating first (stable otherwise).
std::vector<ReviewQueueEntry> flag(std::span<const AccuracyCheck> checks, const FlagPolicy& policy);

// assignment_id,rating,band,flagged
std::string checks_to_csv(std::span<const AccuracyCheck> checks, const FlagPolicy& policy);
std::vector<AccuracyCheck> checks_from_csv(std::string_view content);

}  // namespace peerlabel
