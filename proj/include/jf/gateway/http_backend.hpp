#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "jf/gateway/backend_config.hpp"

namespace jf::gateway {

// OpenAI-style chat-completions and embeddings over HTTP(S).
// Local image paths are sent inline as base64 data URLs.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendConfig config, const EnvLookup& env = process_env());
  ~HttpBackend() override;

  std::string chat(const ChatRequest& req) override;
  std::vector<Embedding> embed(const std::vector<std::string>& texts,
                               const std::string& model_tag) override;
  bool supports_seed() const override { return true; }

  // Request bodies, exposed for tests.
  static Json chat_body(const ChatRequest& req);
  static Json embed_body(const std::vector<std::string>& texts, const std::string& model_tag);

 private:
  Json post(const std::string& path, const Json& body);

  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string base64_encode(std::string_view bytes);
std::string image_url_for(const std::string& image_ref);

// 429 and 5xx are transient; other 4xx are not.
bool retryable_status(int status);

}  // namespace jf::gateway
