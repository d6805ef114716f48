#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ctrnli {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);

struct Message {
  Role role = Role::User;
  std::string content;

  bool operator==(const Message&) const = default;
};

/// Decoding parameters sent with every request.
///
/// Decoding is greedy unless sampling is explicitly enabled; a nonzero
/// temperature without sampling is rejected at construction.
class GenerationParams {
 public:
  GenerationParams(double temperature, int max_tokens, bool sampling_enabled,
                   std::optional<std::uint64_t> seed = std::nullopt);

  static GenerationParams deterministic(int max_tokens = 1024) { return {0.0, max_tokens, false}; }
  static GenerationParams sampled(double temperature, int max_tokens = 1024,
                                  std::optional<std::uint64_t> seed = std::nullopt) {
    return {temperature, max_tokens, true, seed};
  }

  double temperature() const { return temperature_; }
  int max_tokens() const { return max_tokens_; }
  bool sampling_enabled() const { return sampling_enabled_; }
  const std::optional<std::uint64_t>& seed() const { return seed_; }

  GenerationParams with_seed(std::uint64_t seed) const { return {temperature_, max_tokens_, sampling_enabled_, seed}; }

  bool operator==(const GenerationParams&) const = default;

 private:
  double temperature_;
  int max_tokens_;
  bool sampling_enabled_;
  std::optional<std::uint64_t> seed_;
};

class ChatRequest {
 public:
  // Throws std::invalid_argument unless at least one message has Role::User.
  ChatRequest(std::vector<Message> messages, GenerationParams params);

  const std::vector<Message>& messages() const { return messages_; }
  const GenerationParams& params() const { return params_; }
  std::size_t total_chars() const;

  // Concatenated content of the user messages.
  std::string user_text() const;

 private:
  std::vector<Message> messages_;
  GenerationParams params_;
};

struct LlmResponse {
  std::string content;
  bool from_cache = false;
  std::chrono::milliseconds latency{0};
};

struct Digest {
  std::array<unsigned char, 32> bytes{};

  std::string hex() const;
  bool operator==(const Digest&) const = default;
};

// SHA-256 over a canonical serialization of (model, messages, params).
Digest cache_key(const ChatRequest& request, std::string_view model);

// Errors ------------------------------------------------------------------

class LlmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Retriable failure: connection error, HTTP 429, HTTP 5xx, unreadable body.
class TransientError : public LlmError {
 public:
  using LlmError::LlmError;
};

class EndpointUnavailable : public LlmError {
 public:
  using LlmError::LlmError;
};

class NonRetriableHttpError : public LlmError {
 public:
  NonRetriableHttpError(int status, const std::string& body);
  int status() const { return status_; }

 private:
  int status_;
};

class ContextTooLong : public LlmError {
 public:
  ContextTooLong(std::size_t chars, std::size_t limit);
};

class StubExhausted : public LlmError {
 public:
  using LlmError::LlmError;
};

// Backends ------------------------------------------------------------------

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Returns the assistant text. Throws TransientError for retriable failures
  // and any other LlmError for permanent ones.
  virtual std::string send(const ChatRequest& request, const std::string& model) = 0;
};

/// Replays a fixed list of replies strictly in order; a call past the end
/// throws StubExhausted.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies);

  std::string send(const ChatRequest& request, const std::string& model) override;

  std::size_t consumed() const;
  std::size_t remaining() const;
  std::vector<ChatRequest> requests() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
  std::vector<ChatRequest> requests_;
};

class FunctionBackend : public ChatBackend {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;
  explicit FunctionBackend(Handler handler) : handler_(std::move(handler)) {}

  std::string send(const ChatRequest& request, const std::string&) override { return handler_(request); }

 private:
  Handler handler_;
};

struct EndpointConfig {
  std::string url;  // base URL, e.g. https://host/v1, or the full chat-completions URL
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::seconds timeout{300};
};

/// POSTs OpenAI-style chat-completion bodies over HTTP(S).
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(EndpointConfig config);

  std::string send(const ChatRequest& request, const std::string& model) override;

  const std::string& route() const { return path_; }

 private:
  EndpointConfig config_;
  std::string origin_;
  std::string path_;
  std::string token_;
};

// Splits "scheme://host[:port][/path]" into origin and path.
std::pair<std::string, std::string> split_url(const std::string& url);

// Cache -------------------------------------------------------------------

/// Append-only response store, one JSON record per line.
///
/// Records are loaded on open; each insert is appended and flushed before
/// returning. A truncated final line (interrupted write) is skipped.
class ResponseCache {
 public:
  ResponseCache() = default;  // in-memory only
  explicit ResponseCache(const std::filesystem::path& path);

  std::optional<std::string> lookup(const Digest& key) const;
  void insert(const Digest& key, std::string_view model, const std::string& content);
  void flush();

  std::size_t size() const;
  std::size_t skipped_lines() const { return skipped_; }

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t skipped_ = 0;
};

// Client ------------------------------------------------------------------

class RateLimiter {
 public:
  using Sleeper = std::function<void(std::chrono::nanoseconds)>;

  // 0 disables limiting.
  explicit RateLimiter(double requests_per_minute, Sleeper sleeper = {});

  void acquire();

 private:
  std::mutex mutex_;
  std::chrono::nanoseconds interval_{0};
  std::chrono::steady_clock::time_point next_{};
  Sleeper sleeper_;
};

struct ClientOptions {
  std::string model;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double backoff_factor = 2.0;
  double requests_per_minute = 0.0;
  std::size_t max_context_chars = 0;  // 0 = no guard
  // Replaces std::this_thread::sleep_for for backoff and rate limiting.
  std::function<void(std::chrono::nanoseconds)> sleeper;
};

/// Thread-safe front end: cache lookup, context guard, rate limit, retries.
class LlmClient {
 public:
  LlmClient(std::shared_ptr<ChatBackend> backend, ClientOptions options,
            std::shared_ptr<ResponseCache> cache = std::make_shared<ResponseCache>());

  LlmResponse complete(const ChatRequest& request);

  Digest key_for(const ChatRequest& request) const { return cache_key(request, options_.model); }
  const std::string& model() const { return options_.model; }

  std::size_t backend_calls() const { return backend_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }
  ResponseCache& cache() { return *cache_; }

 private:
  std::shared_ptr<ChatBackend> backend_;
  ClientOptions options_;
  std::shared_ptr<ResponseCache> cache_;
  RateLimiter limiter_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace ctrnli
