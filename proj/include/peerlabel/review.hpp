#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "peerlabel/verifier.hpp"

namespace peerlabel {

// Human three-point scale.
enum class Score : int { disagree = -1, ambiguous = 0, agree = 1 };
std::string_view to_string(Score score);
int to_int(Score score);

struct HumanJudgment {
  std::size_t seq = 0;  // position in the log, 1-based
  std::string assignment_id;
  std::string rater_id;
  Score score = Score::ambiguous;
  std::string timestamp;
  std::optional<std::string> note;
  bool adjudication = false;

  bool operator==(const HumanJudgment&) const = default;
};

enum class ResolutionMethod { unanimous, adjudicated };
std::string_view to_string(ResolutionMethod method);

struct ResolvedScore {
  std::string assignment_id;
  Score score = Score::ambiguous;
  ResolutionMethod method = ResolutionMethod::unanimous;
  std::optional<std::string> adjudicator;

  bool operator==(const ResolvedScore&) const = default;
};

enum class ResolutionStatus { resolved, pending, no_judgments };
std::string_view to_string(ResolutionStatus status);

struct Resolution {
  ResolutionStatus status = ResolutionStatus::no_judgments;
  std::optional<ResolvedScore> resolved;
  std::string reason;
};

enum class ReviewErrorKind { unknown_assignment, invalid_score, write_conflict, invalid_request, corrupt_log };

struct ReviewError : std::runtime_error {
  ReviewErrorKind kind;
  ReviewError(ReviewErrorKind kind_, const std::string& what) : std::runtime_error(what), kind(kind_) {}
};

struct JudgmentRequest {
  std::string assignment_id;
  std::string rater_id;
  int score = 0;
  std::optional<std::string> note;
  bool adjudication = false;
  // Optimistic concurrency: the rater's history length the caller last saw.
  std::optional<std::size_t> expected_prior_count;
  std::string timestamp;  // filled with the current UTC time when empty
};

std::string utc_timestamp_now();

inline constexpr std::size_t kDefaultQuorum = 3;

/// Append-only judgment log with derived live/resolved views. Writes are
/// serialized; readers see a consistent snapshot. When a log path is given
/// the existing log is replayed on construction and every accepted judgment
/// is appended and flushed before it becomes visible.
class ReviewStore {
 public:
  ReviewStore(std::set<std::string> known_assignments, std::size_t quorum = kDefaultQuorum,
              std::optional<std::filesystem::path> log_path = std::nullopt);

  HumanJudgment record_judgment(const JudgmentRequest& request);

  Resolution resolve(std::string_view assignment_id) const;
  std::vector<ResolvedScore> resolved_scores() const;  // ordered by assignment id

  std::vector<HumanJudgment> live_judgments(std::string_view assignment_id) const;
  std::vector<HumanJudgment> history(std::string_view assignment_id, std::string_view rater_id) const;
  std::vector<HumanJudgment> log() const;

  bool knows(std::string_view assignment_id) const { return known_.count(std::string(assignment_id)) > 0; }
  std::size_t quorum() const { return quorum_; }

 private:
  void apply(HumanJudgment judgment);
  Resolution resolve_locked(const std::string& assignment_id) const;

  std::set<std::string> known_;
  std::size_t quorum_;
  std::optional<std::filesystem::path> log_path_;
  mutable std::shared_mutex mutex_;
  std::vector<HumanJudgment> log_;
  // assignment -> rater -> indices into log_ (oldest first); adjudications kept apart
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> by_rater_;
  std::map<std::string, std::vector<std::size_t>> adjudications_;
};

std::string judgment_to_json_line(const HumanJudgment& judgment);
HumanJudgment judgment_from_json(const nlohmann::json& j);

struct AgreementReport {
  std::size_t accurate = 0;    // +1
  std::size_t ambiguous = 0;   // 0
  std::size_t inaccurate = 0;  // -1
  std::size_t total = 0;
  int accurate_percent = 0;
  int ambiguous_percent = 0;
  int inaccurate_percent = 0;
  bool no_data = true;
};

/// Whole percent, rounding half away from zero.
int whole_percent(std::size_t count, std::size_t total);

AgreementReport agreement_report(std::span<const ResolvedScore> resolved);

/// Which (band, human score) cells count as disagreement.
///   headline: band inaccurate & human +1, band accurate & human -1
///   decisive: a decisive band (inaccurate/accurate) the human score does not match
///   strict:   decisive, plus the uncertain band against +1 or -1
enum class Strictness { headline, decisive, strict };
std::string_view to_string(Strictness strictness);
Strictness parse_strictness(std::string_view s);
bool is_disagreement(Band band, Score score, Strictness strictness);

struct CrossTab {
  // cells[band][score + 1]: rows inaccurate/uncertain/accurate, columns -1/0/+1.
  std::array<std::array<std::size_t, 3>, 3> cells{};
  std::size_t total = 0;
  std::size_t model_conservative = 0;  // band inaccurate, human +1
  std::size_t model_lenient = 0;       // band accurate, human -1
  std::size_t disagreements = 0;
  Strictness strictness = Strictness::decisive;

  std::size_t at(Band band, Score score) const {
    return cells[static_cast<std::size_t>(band)][static_cast<std::size_t>(to_int(score) + 1)];
  }
};

CrossTab cross_tab(std::span<const AccuracyCheck> checks, std::span<const ResolvedScore> resolved,
                   Strictness strictness = Strictness::decisive);

nlohmann::ordered_json to_json(const AgreementReport& report);
nlohmann::ordered_json to_json(const CrossTab& tab);
nlohmann::ordered_json to_json(const HumanJudgment& judgment);
nlohmann::ordered_json to_json(const ResolvedScore& resolved);

std::string agreement_to_csv(const AgreementReport& report);
std::string cross_tab_to_csv(const CrossTab& tab);

}  // namespace peerlabel
