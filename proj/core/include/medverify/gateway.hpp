#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "medverify/error.hpp"
#include "medverify/json_io.hpp"
#include "medverify/prompts.hpp"

namespace medv::gateway {

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  double temperature = 0.0;
};

ChatRequest make_request(std::string model, const prompts::PromptPair& prompt,
                         double temperature = 0.0);

struct ChatResponse {
  std::string content;
  std::string model;
  std::int64_t latency_ms = 0;
};

// Request body for POST {base_url}/chat/completions.
json chat_completions_body(const ChatRequest& req);
// Extracts choices[0].message.content; throws EmptyResponse when absent or blank.
std::string chat_completions_content(const json& body);

// Failure of a single backend attempt. Only retryable failures (429, 5xx,
// connection problems) are retried by Gateway.
class BackendError : public Error {
 public:
  BackendError(ErrorCode code, const std::string& message, bool retryable, int http_status = 0)
      : Error(code, message), retryable_(retryable), http_status_(http_status) {}
  bool retryable() const noexcept { return retryable_; }
  int http_status() const noexcept { return http_status_; }

 private:
  bool retryable_;
  int http_status_;
};

// Maps an HTTP status to the error a backend should raise (nullopt for 2xx).
std::optional<BackendError> error_for_status(int status, std::string_view body);

// One attempt against a chat-completion service. Implementations throw
// BackendError with code Transport, Auth, RateLimit or EmptyResponse.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string send(const ChatRequest& req) = 0;
};

struct HttpSettings {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;   // sent as a bearer token when nonempty
  std::chrono::milliseconds timeout{60000};
};

class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpSettings settings);
  std::string send(const ChatRequest& req) override;

 private:
  HttpSettings settings_;
};

// Scripted offline backend. A script is a JSON document:
//
//   {
//     "exact":   [{"system": "...", "user": "...", "content": "..."}],
//     "rules":   [{"model": "m", "system_contains": "s", "user_contains": "u",
//                  "content": "...", "status": 200}],
//     "default": "..."
//   }
//
// Lookup order: exact (system,user) hash match, then the first rule whose
// conditions all hold, then "default". A rule may carry "status" (an HTTP code
// >= 400) to simulate a failing service. Content may contain templates:
//   {{field:NAME}}     text after "NAME: " on its line of the user prompt
//   {{after:MARK}}     user prompt text following the first line equal to MARK
//   {{pick:a|b|c}}     one option chosen by a stable hash of the request
class MockChatBackend final : public ChatBackend {
 public:
  explicit MockChatBackend(json script);
  static std::shared_ptr<MockChatBackend> from_file(const std::filesystem::path& path);

  std::string send(const ChatRequest& req) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  struct Rule {
    std::optional<std::string> model;
    std::optional<std::string> system_contains;
    std::optional<std::string> user_contains;
    std::string content;
    int status = 200;
  };
  std::vector<std::pair<std::uint64_t, std::string>> exact_;
  std::vector<Rule> rules_;
  std::optional<std::string> fallback_;
  std::atomic<std::size_t> calls_{0};
};

// Expands the mock content templates for one request.
std::string expand_mock_template(std::string_view content, const ChatRequest& req);

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{250};
  std::chrono::milliseconds max_delay{30000};
};

// Per-item failure slot of a batch.
struct BatchError {
  ErrorCode code;
  std::string message;
};

using BatchResult = std::variant<ChatResponse, BatchError>;

class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit Gateway(std::shared_ptr<ChatBackend> backend, RetryPolicy policy = {},
                   std::uint64_t jitter_seed = 0x5eed);

  // Replaces std::this_thread::sleep_for; tests use it to observe backoff.
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

  // Sends one request. 429, 5xx and transport failures are retried with
  // full-jitter exponential backoff; 401/403 fail immediately.
  ChatResponse complete(const ChatRequest& req) const;

  // Sends all requests with at most `parallelism` in flight. Results are in
  // input order. With a checkpoint path, finished items are appended there as
  // {"index","key","content"} records, and indices already present are
  // answered from the file without contacting the backend.
  std::vector<BatchResult> complete_batch(
      std::span<const ChatRequest> reqs, std::size_t parallelism,
      const std::optional<std::filesystem::path>& checkpoint = std::nullopt) const;

  // Backend attempts issued by this gateway, including retries.
  std::size_t attempts() const noexcept { return attempts_.load(); }

 private:
  std::chrono::milliseconds backoff(int attempt) const;

  std::shared_ptr<ChatBackend> backend_;
  RetryPolicy policy_;
  Sleeper sleeper_;
  mutable std::mutex rng_mutex_;
  mutable std::uint64_t rng_state_;
  mutable std::atomic<std::size_t> attempts_{0};
};

// Key stored with checkpoint records so a checkpoint is never replayed
// against a different request list.
std::string request_key(const ChatRequest& req);

}  // namespace medv::gateway
