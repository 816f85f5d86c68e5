#include "peerlabel/labeler.hpp"

#include <stdexcept>

#include "json.hpp"
#include "peerlabel/hash.hpp"
#include "peerlabel/text.hpp"

namespace peerlabel {

namespace {

constexpr std::string_view kPersonaPrompt =
    "Forget all prior instructions and information.\n"
    "\n"
    "You are an expert psychology researcher. You study how people work in teams. You have a collection of "
    "comments in which teammates provide each other feedback. You want to know what kind of feedback teammates "
    "typically provide each other. You will be provided the teammate feedback comments and a taxonomy of comments "
    "to use for labeling the kinds of feedback in the comments.";

constexpr std::string_view kTopicsHeader = "Here is the list of topics:\n\n";

constexpr std::string_view kOutputInstructions =
    "Here are some additional instructions:\n"
    "\n"
    "You have to identify the topics in each comment based on the topics in the list above. The topics you use "
    "should be from the list I provided above.\n"
    "\n"
    "You will return your response in a table. In one column in the table labeled 'original comment id', put the "
    "number at the beginning of the comment surrounded by square brackets. In a second column in the table labeled "
    "'topic' you will label the topic or topics in the comment. If multiple topics are present in the comment, "
    "separate the comments with a comma. If no topic is expressed in the comment, write 'N/A' in that cell.\n"
    "\n"
    "Next, I will send you the comments.";

constexpr std::string_view kBatchHeader = "Here is the comment:";

}  // namespace

void ProviderConfig::validate() const {
  if (timeout.count() <= 0) throw std::invalid_argument("timeout must be positive");
  if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  if (concurrency == 0) throw std::invalid_argument("concurrency must be >= 1");
}

std::array<PromptMessage, 2> build_session_prelude(const Taxonomy& taxonomy) {
  if (taxonomy.size() == 0) throw std::invalid_argument("taxonomy has no labels");
  std::string topics(kTopicsHeader);
  for (const auto& label : taxonomy.labels()) {
    topics += label.text;
    topics += "\n\n";
  }
  topics += kOutputInstructions;
  return {PromptMessage{Role::user, std::string(kPersonaPrompt)}, PromptMessage{Role::user, std::move(topics)}};
}

PromptMessage build_batch_message(const Batch& batch) {
  if (batch.comments.empty()) throw std::invalid_argument("batch is empty");
  std::string body(kBatchHeader);
  for (const auto& c : batch.comments) {
    if (text::trim(c.text).empty()) throw std::invalid_argument("comment " + std::to_string(c.id) + " has no text");
    body += "\n[" + std::to_string(c.id) + "] " + c.text;
  }
  return PromptMessage{Role::user, std::move(body)};
}

std::vector<Batch> make_batches(const Corpus& corpus, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < corpus.comments.size(); start += batch_size) {
    Batch b;
    b.index = batches.size();
    const auto end = std::min(corpus.comments.size(), start + batch_size);
    b.comments.assign(corpus.comments.begin() + static_cast<std::ptrdiff_t>(start),
                      corpus.comments.begin() + static_cast<std::ptrdiff_t>(end));
    batches.push_back(std::move(b));
  }
  return batches;
}

std::vector<PromptMessage> labeling_messages(const Taxonomy& taxonomy, const Batch& batch) {
  const auto prelude = build_session_prelude(taxonomy);
  return {prelude[0], prelude[1], build_batch_message(batch)};
}

std::string request_fingerprint(std::span<const PromptMessage> messages, const ProviderConfig& config) {
  nlohmann::ordered_json j;
  j["endpoint"] = config.endpoint;
  j["model"] = config.model;
  j["temperature"] = config.temperature;
  j["messages"] = nlohmann::json::array();
  for (const auto& m : messages) j["messages"].push_back({{"role", to_string(m.role)}, {"text", m.text}});
  return sha256_hex(j.dump());
}

namespace detail {

CallResult call_with_retries(Provider& provider, std::span<const PromptMessage> messages,
                             const CompletionParams& params, const ProviderConfig& config, RateLimiter* limiter,
                             std::size_t& attempts) {
  attempts = 0;
  for (;;) {
    if (limiter) limiter->acquire();
    ++attempts;
    try {
      return CallResult{provider.complete(messages, params), attempts - 1};
    } catch (const ProviderError& e) {
      if (!e.retriable() || attempts > config.max_retries) {
        if (e.kind == ProviderErrorKind::rate_limited) {
          throw ProviderError(e.kind, "rate limit exhausted after " + std::to_string(attempts) + " attempts");
        }
        throw;
      }
    }
    const auto shift = std::min<std::size_t>(attempts - 1, 6);
    std::this_thread::sleep_for(config.backoff_base * (std::int64_t{1} << shift));
  }
}

}  // namespace detail

LabelingRun run_labeling(const Corpus& corpus, const Taxonomy& taxonomy, Provider& provider,
                         const ProviderConfig& config, std::size_t batch_size, RateLimiter* limiter,
                         const ResponseCheck& response_ok) {
  config.validate();
  const auto batches = make_batches(corpus, batch_size);
  std::vector<std::optional<RawBatchResponse>> responses(batches.size());
  std::vector<std::optional<BatchFailure>> failures(batches.size());

  detail::parallel_for(batches.size(), config.concurrency, [&](std::size_t i) {
    const auto& batch = batches[i];
    auto messages = labeling_messages(taxonomy, batch);
    const auto fingerprint = request_fingerprint(messages, config);
    CompletionParams params{config.model, config.temperature, config.timeout,
                            RequestContext{"labeling", std::to_string(batch.index), fingerprint}};
    const auto started = std::chrono::steady_clock::now();
    std::size_t attempts = 0;
    try {
      auto result = detail::call_with_retries(provider, messages, params, config, limiter, attempts);
      RawBatchResponse r;
      r.batch_index = batch.index;
      r.request_fingerprint = fingerprint;
      r.retry_count = result.retries;
      r.response_text = std::move(result.text);
      if (config.corrective_redispatch && response_ok && !response_ok(r.response_text)) {
        messages.push_back(PromptMessage{Role::assistant, r.response_text});
        messages.push_back(PromptMessage{Role::user, std::string(kCorrectiveInstruction)});
        params.context.fingerprint = request_fingerprint(messages, config);
        params.context.key += "#corrective";
        auto retry = detail::call_with_retries(provider, messages, params, config, limiter, attempts);
        r.response_text = std::move(retry.text);
        r.retry_count += retry.retries;
        r.redispatched = true;
      }
      r.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
      responses[i] = std::move(r);
    } catch (const ProviderError& e) {
      failures[i] = BatchFailure{batch.index, e.kind, e.what(), attempts, fingerprint};
    }
  });

  LabelingRun run;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    if (responses[i]) run.responses.push_back(std::move(*responses[i]));
    if (failures[i]) run.failures.push_back(std::move(*failures[i]));
  }
  return run;
}

}  // namespace peerlabel
