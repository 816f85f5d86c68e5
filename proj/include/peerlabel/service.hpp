#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "peerlabel/api.hpp"
#include "peerlabel/manifest.hpp"
#include "peerlabel/provider.hpp"

namespace peerlabel::service {

enum ExitCode : int { kOk = 0, kUsage = 1, kStageOrder = 2, kProviderFailure = 3 };

// Files inside a run directory.
namespace files {
inline constexpr const char* kCorpus = "corpus.jsonl";
inline constexpr const char* kTaxonomy = "taxonomy.jsonl";
inline constexpr const char* kResponses = "responses.jsonl";
inline constexpr const char* kLabelFailures = "label_failures.jsonl";
inline constexpr const char* kIssues = "issues.jsonl";
inline constexpr const char* kAssignments = "assignments.csv";
inline constexpr const char* kChecks = "checks.csv";
inline constexpr const char* kVerifyResponses = "verify_responses.jsonl";
inline constexpr const char* kVerifyFailures = "verify_failures.jsonl";
inline constexpr const char* kJudgments = "judgments.jsonl";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kAgreement = "agreement.csv";
inline constexpr const char* kCrossTab = "crosstab.csv";
inline constexpr const char* kTimings = "timings.log";
}  // namespace files

inline constexpr const char* kApiKeyEnv = "PEERLABEL_API_KEY";
inline constexpr const char* kReviewTokenEnv = "PEERLABEL_REVIEW_TOKEN";

/// Entry point shared by the `peerlabel` binary and the tests. `args`
/// excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Loads the verified run state the review step works on.
ReviewData load_review_data(const std::filesystem::path& run_dir, const RunManifest& manifest);

std::shared_ptr<ReviewStore> open_review_store(const std::filesystem::path& run_dir, const ReviewData& data,
                                               std::size_t quorum);

}  // namespace peerlabel::service
