#include "peerlabel/provider.hpp"

#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "peerlabel/hash.hpp"

namespace peerlabel {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(ProviderErrorKind kind) {
  switch (kind) {
    case ProviderErrorKind::timeout: return "timeout";
    case ProviderErrorKind::rate_limited: return "rate_limited";
    case ProviderErrorKind::transport: return "transport";
    case ProviderErrorKind::bad_response: return "bad_response";
  }
  return "transport";
}

MockProvider::MockProvider(nlohmann::json script) : script_(std::move(script)) {
  if (!script_.is_object()) throw std::invalid_argument("mock script must be a JSON object");
}

MockProvider MockProvider::from_file(const std::filesystem::path& path) {
  try {
    return MockProvider(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("mock script " + path.string() + ": " + e.what());
  }
}

std::size_t MockProvider::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::string MockProvider::complete(std::span<const PromptMessage>, const CompletionParams& params) {
  const auto& ctx = params.context;
  {
    std::lock_guard lock(mutex_);
    ++calls_;
    const auto failure_key = ctx.stage + ":" + ctx.key;
    if (auto it = script_.find("failures"); it != script_.end() && it->contains(failure_key)) {
      auto& seen = failures_seen_[failure_key];
      if (seen < it->at(failure_key).get<std::size_t>()) {
        ++seen;
        throw ProviderError(ProviderErrorKind::transport, "scripted failure for " + failure_key);
      }
    }
  }
  if (auto it = script_.find("fingerprints"); it != script_.end() && it->contains(ctx.fingerprint)) {
    return it->at(ctx.fingerprint).get<std::string>();
  }
  if (auto it = script_.find(ctx.stage); it != script_.end() && it->contains(ctx.key)) {
    return it->at(ctx.key).get<std::string>();
  }
  if (auto it = script_.find(ctx.stage + "_default"); it != script_.end()) return it->get<std::string>();
  throw ProviderError(ProviderErrorKind::transport, "mock script has no response for " + ctx.stage + " " + ctx.key);
}

HttpProvider::HttpProvider(std::string endpoint, std::string api_key_env) : api_key_env_(std::move(api_key_env)) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint must be an http(s) URL: " + endpoint);
  const auto path_start = endpoint.find('/', scheme_end + 3);
  base_ = endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/v1/chat/completions" : endpoint.substr(path_start);
}

std::string HttpProvider::complete(std::span<const PromptMessage> messages, const CompletionParams& params) {
  nlohmann::json body;
  body["model"] = params.model;
  body["temperature"] = params.temperature;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : messages) body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.text}});

  httplib::Client client(base_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(params.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(params.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (const char* key = std::getenv(api_key_env_.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const auto kind = (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout)
                          ? ProviderErrorKind::timeout
                          : ProviderErrorKind::transport;
    throw ProviderError(kind, "request failed: " + httplib::to_string(err));
  }
  if (res->status == 429) throw ProviderError(ProviderErrorKind::rate_limited, "HTTP 429");
  if (res->status >= 500) throw ProviderError(ProviderErrorKind::transport, "HTTP " + std::to_string(res->status));
  if (res->status != 200) throw ProviderError(ProviderErrorKind::bad_response, "HTTP " + std::to_string(res->status));
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(ProviderErrorKind::bad_response, std::string("unexpected response body: ") + e.what());
  }
}

RateLimiter::RateLimiter(std::size_t max_requests, std::chrono::milliseconds interval)
    : max_requests_(max_requests), interval_(interval) {}

void RateLimiter::acquire() {
  if (max_requests_ == 0) return;
  std::unique_lock lock(mutex_);
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    while (!recent_.empty() && now - recent_.front() >= interval_) recent_.pop_front();
    if (recent_.size() < max_requests_) {
      recent_.push_back(now);
      return;
    }
    cv_.wait_until(lock, recent_.front() + interval_);
  }
}

}  // namespace peerlabel
