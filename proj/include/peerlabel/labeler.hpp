#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "peerlabel/corpus.hpp"
#include "peerlabel/provider.hpp"
#include "peerlabel/taxonomy.hpp"

namespace peerlabel {

inline constexpr std::size_t kDefaultBatchSize = 15;

struct Batch {
  std::size_t index = 0;  // 0-based
  std::vector<Comment> comments;
};

struct ProviderConfig {
  std::string endpoint;
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  std::size_t max_retries = 3;
  std::chrono::milliseconds timeout{60000};
  std::size_t rate_limit_requests = 0;  // 0 = unlimited
  std::chrono::milliseconds rate_limit_interval{60000};
  std::size_t concurrency = 4;
  std::chrono::milliseconds backoff_base{500};
  bool corrective_redispatch = false;

  void validate() const;
};

struct RawBatchResponse {
  std::size_t batch_index = 0;
  std::string response_text;
  std::string request_fingerprint;
  std::size_t retry_count = 0;
  bool redispatched = false;
  std::chrono::milliseconds elapsed{0};
};

struct BatchFailure {
  std::size_t batch_index = 0;
  ProviderErrorKind kind = ProviderErrorKind::transport;
  std::string message;
  std::size_t attempts = 0;
  std::string request_fingerprint;
};

struct LabelingRun {
  std::vector<RawBatchResponse> responses;  // ordered by batch_index
  std::vector<BatchFailure> failures;       // ordered by batch_index
};

inline constexpr std::string_view kCorrectiveInstruction =
    "Your previous response did not follow the requested format. Return only the table with the column "
    "'original comment id' and the column 'topic', one row per comment.";

std::array<PromptMessage, 2> build_session_prelude(const Taxonomy& taxonomy);
PromptMessage build_batch_message(const Batch& batch);
std::vector<Batch> make_batches(const Corpus& corpus, std::size_t batch_size = kDefaultBatchSize);

std::vector<PromptMessage> labeling_messages(const Taxonomy& taxonomy, const Batch& batch);

/// SHA-256 over the rendered messages and the response-shaping config
/// (endpoint, model, temperature).
std::string request_fingerprint(std::span<const PromptMessage> messages, const ProviderConfig& config);

// Returns false when a response should trigger the corrective re-dispatch.
using ResponseCheck = std::function<bool(std::string_view)>;

/// One fresh session per batch: prelude + batch message. Batches run up to
/// config.concurrency at a time; failed batches are reported, not dropped.
LabelingRun run_labeling(const Corpus& corpus, const Taxonomy& taxonomy, Provider& provider,
                         const ProviderConfig& config, std::size_t batch_size = kDefaultBatchSize,
                         RateLimiter* limiter = nullptr, const ResponseCheck& response_ok = {});

namespace detail {

struct CallResult {
  std::string text;
  std::size_t retries = 0;
};

// Throws ProviderError after the last attempt; `attempts` receives the count.
CallResult call_with_retries(Provider& provider, std::span<const PromptMessage> messages,
                             const CompletionParams& params, const ProviderConfig& config, RateLimiter* limiter,
                             std::size_t& attempts);

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  if (workers == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
}

}  // namespace detail

}  // namespace peerlabel
