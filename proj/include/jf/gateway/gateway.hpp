#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "jf/core/types.hpp"

namespace jf::gateway {

struct Message {
  std::string role;  // system, user, assistant
  std::string text;
  std::optional<std::string> image_ref;

  bool operator==(const Message&) const = default;
};

struct ChatRequest {
  std::vector<Message> messages;
  std::string model_tag;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::optional<std::int64_t> request_seed;
  // Free-form label such as "p_gen" or "pointwise_eval"; mocks may key on it.
  std::string purpose;
};

// Throws ValidationError: more than one image, no messages, bad max_tokens.
void validate(const ChatRequest& req);

// Single user turn with an optional image.
ChatRequest user_request(std::string text, std::optional<std::string> image_ref,
                         std::string model_tag, double temperature, std::string purpose = "");

// Canonical text of everything that affects the reply; mocks hash this.
std::string request_key(const ChatRequest& req);
// Concatenated message texts.
std::string prompt_text(const ChatRequest& req);

using Embedding = std::vector<double>;

class Backend {
 public:
  virtual ~Backend() = default;
  // Throws TransportError; retryable() decides whether the gateway retries.
  virtual std::string chat(const ChatRequest& req) = 0;
  virtual std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                       const std::string& model_tag) = 0;
  virtual bool supports_seed() const { return true; }
};

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_base_ms = 200;
  double backoff_factor = 2.0;
  int backoff_max_ms = 10000;
};

struct BackendConfig {
  std::string base_url;
  std::string auth_token_env_name;
  int max_parallel = 4;
  RetryPolicy retry;
  int timeout_ms = 120000;
  // Token bucket; rate 0 disables limiting.
  double requests_per_second = 0.0;
  int burst = 1;
};

void validate(const BackendConfig& cfg);

class Semaphore {
 public:
  explicit Semaphore(int count) : count_(count) {}
  void acquire();
  void release();

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int count_;
};

class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;
  TokenBucket(double rate_per_second, int burst);
  // Blocks until a token is available. No-op when the rate is 0.
  void acquire();

 private:
  std::mutex mutex_;
  double rate_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
};

struct ChatOutcome {
  std::string text;
  // One line per attempt: "attempt 1: <error>" or "attempt 3: ok".
  std::vector<std::string> attempts;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

// Thread-safe front end shared by every pipeline stage.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, BackendConfig config, SleepFn sleep = {});

  std::string chat(const ChatRequest& req);
  ChatOutcome chat_with_log(const ChatRequest& req);

  // One L2-normalized vector per text. Throws std::invalid_argument when empty.
  std::vector<Embedding> embed(const std::vector<std::string>& texts, const std::string& model_tag);

  const BackendConfig& config() const noexcept { return config_; }
  int peak_in_flight() const noexcept { return peak_.load(); }
  std::uint64_t calls() const noexcept { return calls_.load(); }

 private:
  template <typename F>
  auto with_retries(F&& attempt, std::vector<std::string>& log) -> decltype(attempt());

  std::shared_ptr<Backend> backend_;
  BackendConfig config_;
  SleepFn sleep_;
  Semaphore slots_;
  TokenBucket bucket_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
  std::atomic<std::uint64_t> calls_{0};
};

Embedding normalize(Embedding v);

}  // namespace jf::gateway
