#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace peerlabel {

enum class Role { system, user, assistant };
std::string_view to_string(Role role);

struct PromptMessage {
  Role role = Role::user;
  std::string text;

  bool operator==(const PromptMessage&) const = default;
};

// Lets script-driven providers find the scripted answer for a request.
struct RequestContext {
  std::string stage;  // "labeling" or "verification"
  std::string key;    // batch index, or assignment id
  std::string fingerprint;
};

struct CompletionParams {
  std::string model;
  double temperature = 0.0;
  std::chrono::milliseconds timeout{60000};
  RequestContext context;
};

enum class ProviderErrorKind { timeout, rate_limited, transport, bad_response };
std::string_view to_string(ProviderErrorKind kind);

struct ProviderError : std::runtime_error {
  ProviderErrorKind kind;
  ProviderError(ProviderErrorKind kind_, const std::string& what) : std::runtime_error(what), kind(kind_) {}
  bool retriable() const { return kind != ProviderErrorKind::bad_response; }
};

/// Chat-completion backend. Implementations must be safe to call from
/// several threads at once.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string complete(std::span<const PromptMessage> messages, const CompletionParams& params) = 0;
};

class FunctionProvider final : public Provider {
 public:
  using Fn = std::function<std::string(std::span<const PromptMessage>, const CompletionParams&)>;
  explicit FunctionProvider(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(std::span<const PromptMessage> messages, const CompletionParams& params) override {
    return fn_(messages, params);
  }

 private:
  Fn fn_;
};

/// Replays a JSON script:
///
///   {
///     "fingerprints": {"<sha256>": "<response>"},
///     "labeling": {"0": "<response for batch 0>", ...},
///     "verification": {"c7:lack-of-communication": "8", ...},
///     "labeling_default": "...", "verification_default": "8",
///     "failures": {"labeling:0": 2}
///   }
///
/// Lookup order is fingerprint, then stage/key, then the stage default.
/// "failures" makes the first N calls for "<stage>:<key>" fail with a
/// transport error.
class MockProvider final : public Provider {
 public:
  explicit MockProvider(nlohmann::json script);
  static MockProvider from_file(const std::filesystem::path& path);

  std::string complete(std::span<const PromptMessage> messages, const CompletionParams& params) override;
  std::size_t calls() const;

 private:
  nlohmann::json script_;
  mutable std::mutex mutex_;
  std::map<std::string, std::size_t> failures_seen_;
  std::size_t calls_ = 0;
};

/// OpenAI-compatible chat completions over HTTP(S). The bearer token is read
/// from an environment variable, never from flags or files.
class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(std::string endpoint, std::string api_key_env = "PEERLABEL_API_KEY");
  std::string complete(std::span<const PromptMessage> messages, const CompletionParams& params) override;

 private:
  std::string base_;  // scheme://host[:port]
  std::string path_;
  std::string api_key_env_;
};

/// At most `max_requests` acquisitions per sliding `interval`. Zero means
/// unlimited. Safe under concurrent acquire().
class RateLimiter {
 public:
  RateLimiter(std::size_t max_requests, std::chrono::milliseconds interval);
  void acquire();

 private:
  std::size_t max_requests_;
  std::chrono::milliseconds interval_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::chrono::steady_clock::time_point> recent_;
};

}  // namespace peerlabel
