#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "peerlabel/corpus.hpp"
#include "peerlabel/response_parser.hpp"
#include "peerlabel/review.hpp"
#include "peerlabel/taxonomy.hpp"
#include "peerlabel/verifier.hpp"

namespace httplib {
class Server;
}

namespace peerlabel {

/// Everything the review step reads from a verified run.
struct ReviewData {
  Corpus corpus;
  Taxonomy taxonomy;
  std::vector<LabelAssignment> assignments;
  std::vector<AccuracyCheck> checks;
  FlagPolicy policy;
  Strictness strictness = Strictness::decisive;
};

/// Report payload shared by the CLI `report` stage and GET /report.
nlohmann::ordered_json report_payload(const ReviewData& data, const ReviewStore& store);

/// Flagged queue joined with comment, label, rating and judgments.
nlohmann::ordered_json queue_payload(const ReviewData& data, const ReviewStore& store,
                                     const std::optional<std::string>& rater = std::nullopt);

struct ApiResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

inline constexpr std::string_view kApiPrefix = "/api/v1";

/// JSON review API under /api/v1:
///   GET  /queue[?rater=ID]     flagged assignments, worst rating first
///   GET  /assignments/{id}     one assignment with check and judgments
///   POST /judgments            {assignment_id, rater_id, score, note?, adjudication?, expected_prior_count?}
///   GET  /report               agreement report and cross-tab
/// Writes go through ReviewStore::record_judgment, the same path the CLI uses.
class ReviewApi {
 public:
  ReviewApi(ReviewData data, std::shared_ptr<ReviewStore> store, std::optional<std::string> token = std::nullopt);

  ApiResponse list_queue(const std::optional<std::string>& rater) const;
  ApiResponse get_assignment(std::string_view assignment_id) const;
  ApiResponse post_judgment(std::string_view body);
  ApiResponse get_report() const;

  bool authorized(std::string_view authorization_header) const;

  /// Registers the routes; serves `ui_dir` statically at "/" when given.
  void mount(httplib::Server& server, const std::optional<std::filesystem::path>& ui_dir = std::nullopt);

  const ReviewData& data() const { return data_; }

 private:
  ReviewData data_;
  std::shared_ptr<ReviewStore> store_;
  std::optional<std::string> token_;
  std::map<std::string, std::size_t> index_;  // assignment id -> position
};

}  // namespace peerlabel
