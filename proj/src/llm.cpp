#include "ctrnli/llm.hpp"

#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>
#include <openssl/sha.h>

namespace ctrnli {

namespace {

void default_sleep(std::chrono::nanoseconds d) {
  if (d.count() > 0) std::this_thread::sleep_for(d);
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System:
      return "system";
    case Role::User:
      return "user";
    case Role::Assistant:
      return "assistant";
  }
  return "?";
}

GenerationParams::GenerationParams(double temperature, int max_tokens, bool sampling_enabled,
                                   std::optional<std::uint64_t> seed)
    : temperature_(temperature), max_tokens_(max_tokens), sampling_enabled_(sampling_enabled), seed_(seed) {
  if (!std::isfinite(temperature) || temperature < 0.0) {
    throw std::invalid_argument("temperature must be a finite value >= 0");
  }
  if (max_tokens <= 0) {
    throw std::invalid_argument("max_tokens must be positive");
  }
  if (!sampling_enabled && temperature != 0.0) {
    throw std::invalid_argument("temperature must be 0 when sampling is disabled");
  }
}

ChatRequest::ChatRequest(std::vector<Message> messages, GenerationParams params)
    : messages_(std::move(messages)), params_(params) {
  bool has_user = false;
  for (const auto& m : messages_) has_user = has_user || m.role == Role::User;
  if (!has_user) {
    throw std::invalid_argument("chat request needs at least one user message");
  }
}

std::size_t ChatRequest::total_chars() const {
  std::size_t n = 0;
  for (const auto& m : messages_) n += m.content.size();
  return n;
}

std::string ChatRequest::user_text() const {
  std::string out;
  for (const auto& m : messages_) {
    if (m.role == Role::User) out += m.content;
  }
  return out;
}

std::string Digest::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

Digest cache_key(const ChatRequest& request, std::string_view model) {
  auto messages = nlohmann::json::array();
  for (const auto& m : request.messages()) {
    messages.push_back({to_string(m.role), m.content});
  }
  const auto& p = request.params();
  const nlohmann::json canonical = {
      {"model", model},
      {"messages", std::move(messages)},
      {"temperature", p.temperature()},
      {"max_tokens", p.max_tokens()},
      {"sampling", p.sampling_enabled()},
      {"seed", p.seed() ? nlohmann::json(*p.seed()) : nlohmann::json()},
  };
  const auto text = canonical.dump();
  Digest d;
  SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), d.bytes.data());
  return d;
}

NonRetriableHttpError::NonRetriableHttpError(int status, const std::string& body)
    : LlmError("HTTP " + std::to_string(status) + ": " + body.substr(0, 512)), status_(status) {}

ContextTooLong::ContextTooLong(std::size_t chars, std::size_t limit)
    : LlmError("prompt of " + std::to_string(chars) + " chars exceeds the context guard of " + std::to_string(limit)) {}

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}

std::string ScriptedBackend::send(const ChatRequest& request, const std::string&) {
  std::lock_guard lock(mutex_);
  requests_.push_back(request);
  if (next_ >= replies_.size()) {
    throw StubExhausted("scripted stub exhausted after " + std::to_string(replies_.size()) + " replies");
  }
  return replies_[next_++];
}

std::size_t ScriptedBackend::consumed() const {
  std::lock_guard lock(mutex_);
  return next_;
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mutex_);
  return replies_.size() - next_;
}

std::vector<ChatRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

RateLimiter::RateLimiter(double requests_per_minute, Sleeper sleeper)
    : sleeper_(sleeper ? std::move(sleeper) : Sleeper(default_sleep)) {
  if (requests_per_minute > 0) {
    interval_ = std::chrono::nanoseconds(static_cast<std::int64_t>(60e9 / requests_per_minute));
  }
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::chrono::nanoseconds wait{0};
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    const auto slot = std::max(now, next_);
    next_ = slot + interval_;
    wait = std::chrono::duration_cast<std::chrono::nanoseconds>(slot - now);
  }
  if (wait.count() > 0) sleeper_(wait);
}

LlmClient::LlmClient(std::shared_ptr<ChatBackend> backend, ClientOptions options, std::shared_ptr<ResponseCache> cache)
    : backend_(std::move(backend)),
      options_(std::move(options)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      limiter_(options_.requests_per_minute, options_.sleeper) {
  if (!backend_) throw std::invalid_argument("LlmClient needs a backend");
  if (options_.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  if (!options_.sleeper) options_.sleeper = default_sleep;
}

LlmResponse LlmClient::complete(const ChatRequest& request) {
  const auto started = std::chrono::steady_clock::now();
  const auto key = key_for(request);
  if (auto hit = cache_->lookup(key)) {
    ++cache_hits_;
    return {std::move(*hit), true, std::chrono::milliseconds(0)};
  }
  if (options_.max_context_chars > 0 && request.total_chars() > options_.max_context_chars) {
    throw ContextTooLong(request.total_chars(), options_.max_context_chars);
  }

  auto delay = std::chrono::duration<double, std::milli>(options_.initial_backoff);
  std::string last_error;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    limiter_.acquire();
    try {
      ++backend_calls_;
      auto content = backend_->send(request, options_.model);
      cache_->insert(key, options_.model, content);
      const auto latency =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
      return {std::move(content), false, latency};
    } catch (const TransientError& e) {
      last_error = e.what();
    }
    if (attempt < options_.max_attempts) {
      options_.sleeper(std::chrono::duration_cast<std::chrono::nanoseconds>(delay));
      delay *= options_.backoff_factor;
    }
  }
  throw EndpointUnavailable("endpoint unavailable after " + std::to_string(options_.max_attempts) +
                            " attempts: " + last_error);
}

}  // namespace ctrnli
