#include "peerlabel/verifier.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>

#include "peerlabel/csv.hpp"
#include "peerlabel/text.hpp"

namespace peerlabel {

namespace {

constexpr std::string_view kAccuracyQuestion =
    "On a scale from 1 (completely inaccurate) to 10 (completely accurate), how accurate is the following label "
    "for describing a topic mentioned in the following comment? Only provide your numeric rating.";

}  // namespace

std::string_view to_string(Band band) {
  switch (band) {
    case Band::inaccurate: return "inaccurate";
    case Band::uncertain: return "uncertain";
    case Band::accurate: return "accurate";
  }
  return "inaccurate";
}

Band parse_band(std::string_view s) {
  for (auto b : {Band::inaccurate, Band::uncertain, Band::accurate}) {
    if (text::iequals(text::trim(s), to_string(b))) return b;
  }
  throw std::invalid_argument("unknown band: " + std::string(s));
}

Band band_of(int rating) {
  if (rating < 1 || rating > 10) throw std::out_of_range("rating outside 1..10: " + std::to_string(rating));
  if (rating <= 3) return Band::inaccurate;
  if (rating <= 7) return Band::uncertain;
  return Band::accurate;
}

PromptMessage build_accuracy_prompt(std::string_view label_text, std::string_view comment_text) {
  if (text::trim(label_text).empty()) throw std::invalid_argument("label text is empty");
  if (text::trim(comment_text).empty()) throw std::invalid_argument("comment text is empty");
  std::string body(kAccuracyQuestion);
  body += "\n\nLABEL: ";
  body += label_text;
  body += "\n\nCOMMENT: ";
  body += comment_text;
  return PromptMessage{Role::user, std::move(body)};
}

ParsedRating parse_rating(std::string_view input) {
  const auto trimmed = text::trim(input);
  auto check_range = [&](long long v, bool lenient) {
    if (v < 1 || v > 10) {
      throw RatingError(RatingErrorKind::out_of_range, "rating " + std::to_string(v) + " outside 1..10");
    }
    return ParsedRating{static_cast<int>(v), lenient};
  };

  long long value = 0;
  if (!trimmed.empty()) {
    auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), value);
    if (ec == std::errc{} && ptr == trimmed.data() + trimmed.size()) return check_range(value, false);
    if (ec == std::errc::result_out_of_range) {
      throw RatingError(RatingErrorKind::out_of_range, "rating too large: " + std::string(trimmed));
    }
  }

  for (std::size_t i = 0; i < trimmed.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(trimmed[i]))) continue;
    if (i > 0 && std::isalpha(static_cast<unsigned char>(trimmed[i - 1]))) continue;
    const bool negative = i > 0 && trimmed[i - 1] == '-';
    std::size_t j = i;
    while (j < trimmed.size() && std::isdigit(static_cast<unsigned char>(trimmed[j]))) ++j;
    if (j - i > 6) throw RatingError(RatingErrorKind::out_of_range, "rating too large");
    std::from_chars(trimmed.data() + i, trimmed.data() + j, value);
    return check_range(negative ? -value : value, true);
  }
  throw RatingError(RatingErrorKind::no_rating_found, "no rating found in response");
}

VerificationRun run_verification(std::span<const LabelAssignment> assignments, const Corpus& corpus,
                                 Provider& provider, const ProviderConfig& config, RateLimiter* limiter) {
  config.validate();
  struct Slot {
    std::optional<AccuracyCheck> check;
    std::optional<VerificationFailure> failure;
    bool skipped = false;
  };
  std::vector<Slot> slots(assignments.size());

  detail::parallel_for(assignments.size(), config.concurrency, [&](std::size_t i) {
    const auto& a = assignments[i];
    auto& slot = slots[i];
    if (a.not_applicable()) {
      slot.skipped = true;
      return;
    }
    const auto* comment = corpus.find(a.comment_id);
    if (!comment) {
      slot.failure = VerificationFailure{a.assignment_id, "comment " + std::to_string(a.comment_id) + " not found"};
      return;
    }
    const std::array<PromptMessage, 1> messages{build_accuracy_prompt(a.label->text, comment->text)};
    CompletionParams params{config.model, config.temperature, config.timeout,
                            RequestContext{"verification", a.assignment_id, request_fingerprint(messages, config)}};
    try {
      std::size_t attempts = 0;
      auto result = detail::call_with_retries(provider, messages, params, config, limiter, attempts);
      const auto parsed = parse_rating(result.text);
      slot.check = AccuracyCheck{a.assignment_id, parsed.rating, band_of(parsed.rating), std::move(result.text),
                                 parsed.lenient};
    } catch (const ProviderError& e) {
      slot.failure = VerificationFailure{a.assignment_id, std::string(to_string(e.kind)) + ": " + e.what()};
    } catch (const RatingError& e) {
      slot.failure = VerificationFailure{
          a.assignment_id,
          std::string(e.kind == RatingErrorKind::out_of_range ? "out_of_range" : "no_rating_found") + ": " + e.what()};
    }
  });

  VerificationRun run;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    auto& s = slots[i];
    if (s.skipped) run.skipped.push_back(assignments[i].assignment_id);
    if (s.failure) run.failures.push_back(std::move(*s.failure));
    if (s.check) {
      if (s.check->lenient) run.lenient.push_back(s.check->assignment_id);
      run.checks.push_back(std::move(*s.check));
    }
  }
  return run;
}

FlagPolicy::FlagPolicy(std::set<Band> bands) : flag_bands(std::move(bands)) {
  if (flag_bands.empty()) throw std::invalid_argument("flag policy needs at least one band");
}

FlagPolicy parse_flag_policy(std::string_view comma_separated) {
  std::set<Band> bands;
  for (const auto& part : text::split(comma_separated, ',')) {
    if (!text::trim(part).empty()) bands.insert(parse_band(part));
  }
  return FlagPolicy(std::move(bands));
}

std::string format_flag_policy(const FlagPolicy& policy) {
  std::vector<std::string> parts;
  for (auto b : policy.flag_bands) parts.emplace_back(to_string(b));
  return text::join(parts, ",");
}

std::vector<ReviewQueueEntry> flag(std::span<const AccuracyCheck> checks, const FlagPolicy& policy) {
  std::vector<ReviewQueueEntry> out;
  for (const auto& c : checks) {
    if (policy.flag_bands.count(c.band)) out.push_back(ReviewQueueEntry{c.assignment_id, c.rating, c.band});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.rating < b.rating; });
  return out;
}

std::string checks_to_csv(std::span<const AccuracyCheck> checks, const FlagPolicy& policy) {
  std::string out = csv::format_row({"assignment_id", "rating", "band", "flagged"});
  for (const auto& c : checks) {
    out += csv::format_row({c.assignment_id, std::to_string(c.rating), std::string(to_string(c.band)),
                            policy.flag_bands.count(c.band) ? "true" : "false"});
  }
  return out;
}

std::vector<AccuracyCheck> checks_from_csv(std::string_view content) {
  const auto rows = csv::parse(content);
  std::vector<AccuracyCheck> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r].cells;
    if (cells.size() != 4) throw std::runtime_error("checks row " + std::to_string(rows[r].line) + ": expected 4 cells");
    AccuracyCheck c;
    c.assignment_id = cells[0];
    c.rating = std::stoi(cells[1]);
    c.band = band_of(c.rating);
    if (c.band != parse_band(cells[2])) throw std::runtime_error("checks row " + std::to_string(rows[r].line) + ": band does not match rating");
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace peerlabel
