#include "jf/gateway/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "jf/core/error.hpp"
#include "jf/core/log.hpp"

namespace jf::gateway {

void validate(const ChatRequest& req) {
  if (req.messages.empty()) throw ValidationError("messages", "request without messages");
  int images = 0;
  for (const auto& m : req.messages) images += m.image_ref ? 1 : 0;
  if (images > 1) throw ValidationError("messages", "at most one image per request");
  if (req.max_tokens <= 0) throw ValidationError("max_tokens", "must be positive");
  if (req.temperature < 0.0) throw ValidationError("temperature", "must be >= 0");
}

ChatRequest user_request(std::string text, std::optional<std::string> image_ref,
                         std::string model_tag, double temperature, std::string purpose) {
  ChatRequest req;
  req.messages.push_back({"user", std::move(text), std::move(image_ref)});
  req.model_tag = std::move(model_tag);
  req.temperature = temperature;
  req.purpose = std::move(purpose);
  return req;
}

std::string request_key(const ChatRequest& req) {
  Json j = Json::object();
  j["model"] = req.model_tag;
  j["temperature"] = req.temperature;
  j["max_tokens"] = req.max_tokens;
  j["seed"] = req.request_seed ? Json(*req.request_seed) : Json(nullptr);
  j["messages"] = Json::array();
  for (const auto& m : req.messages) {
    j["messages"].push_back(
        {{"role", m.role}, {"text", m.text}, {"image", m.image_ref ? Json(*m.image_ref) : Json(nullptr)}});
  }
  return j.dump();
}

std::string prompt_text(const ChatRequest& req) {
  std::string out;
  for (const auto& m : req.messages) {
    if (!out.empty()) out += '\n';
    out += m.text;
  }
  return out;
}

void validate(const BackendConfig& cfg) {
  if (cfg.max_parallel < 1) throw ConfigError("backend: max_parallel must be >= 1");
  if (cfg.retry.max_attempts < 1) throw ConfigError("backend: retry.max_attempts must be >= 1");
  if (cfg.retry.backoff_base_ms < 0) throw ConfigError("backend: retry.backoff_base_ms must be >= 0");
  if (cfg.timeout_ms <= 0) throw ConfigError("backend: timeout_ms must be > 0");
  if (cfg.requests_per_second < 0.0) throw ConfigError("backend: requests_per_second must be >= 0");
  if (cfg.burst < 1) throw ConfigError("backend: burst must be >= 1");
}

void Semaphore::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return count_ > 0; });
  --count_;
}

void Semaphore::release() {
  {
    std::lock_guard lock(mutex_);
    ++count_;
  }
  cv_.notify_one();
}

TokenBucket::TokenBucket(double rate_per_second, int burst)
    : rate_(rate_per_second), capacity_(burst), tokens_(burst), last_(Clock::now()) {}

void TokenBucket::acquire() {
  if (rate_ <= 0.0) return;
  std::unique_lock lock(mutex_);
  for (;;) {
    const auto now = Clock::now();
    tokens_ = std::min(capacity_,
                       tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

Embedding normalize(Embedding v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0 || !std::isfinite(norm)) throw TransportError("embedding with zero norm", false);
  for (double& x : v) x /= norm;
  return v;
}

Gateway::Gateway(std::shared_ptr<Backend> backend, BackendConfig config, SleepFn sleep)
    : backend_(std::move(backend)),
      config_(std::move(config)),
      sleep_(sleep ? std::move(sleep) : SleepFn([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      slots_(config_.max_parallel),
      bucket_(config_.requests_per_second, config_.burst) {
  if (!backend_) throw ConfigError("gateway: no backend");
  validate(config_);
}

template <typename F>
auto Gateway::with_retries(F&& attempt, std::vector<std::string>& log) -> decltype(attempt()) {
  double delay = config_.retry.backoff_base_ms;
  for (int n = 1;; ++n) {
    bucket_.acquire();
    slots_.acquire();
    const int now = ++in_flight_;
    for (int prev = peak_.load(); now > prev && !peak_.compare_exchange_weak(prev, now);) {
    }
    ++calls_;
    try {
      auto result = attempt();
      --in_flight_;
      slots_.release();
      log.push_back("attempt " + std::to_string(n) + ": ok");
      return result;
    } catch (const TransportError& e) {
      --in_flight_;
      slots_.release();
      log.push_back("attempt " + std::to_string(n) + ": " + e.what());
      if (!e.retryable()) throw TransportError(e.what(), false, e.status(), log);
      if (n >= config_.retry.max_attempts) {
        throw TransportError("retries exhausted after " + std::to_string(n) + " attempts: " + e.what(),
                             false, e.status(), log);
      }
    } catch (...) {
      --in_flight_;
      slots_.release();
      throw;
    }
    sleep_(std::chrono::milliseconds(static_cast<long long>(delay)));
    delay = std::min<double>(delay * config_.retry.backoff_factor, config_.retry.backoff_max_ms);
  }
}

ChatOutcome Gateway::chat_with_log(const ChatRequest& req) {
  validate(req);
  ChatRequest effective = req;
  if (effective.request_seed && !backend_->supports_seed()) {
    log_info("gateway: backend ignores request_seed; dropped");
    effective.request_seed.reset();
  }
  ChatOutcome out;
  out.text = with_retries([&] { return backend_->chat(effective); }, out.attempts);
  return out;
}

std::string Gateway::chat(const ChatRequest& req) { return chat_with_log(req).text; }

std::vector<Embedding> Gateway::embed(const std::vector<std::string>& texts,
                                      const std::string& model_tag) {
  if (texts.empty()) throw std::invalid_argument("embed: empty input");
  std::vector<std::string> log;
  auto vectors = with_retries([&] { return backend_->embed(texts, model_tag); }, log);
  if (vectors.size() != texts.size()) {
    throw TransportError("embed: backend returned " + std::to_string(vectors.size()) +
                             " vectors for " + std::to_string(texts.size()) + " texts",
                         false);
  }
  for (auto& v : vectors) v = normalize(std::move(v));
  return vectors;
}

}  // namespace jf::gateway
