#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <regex>
#include <string>
#include <vector>

#include "jf/gateway/gateway.hpp"

namespace jf::gateway {

// Pseudorandom direction derived from (seed, text); not normalized.
Embedding hash_embedding(std::uint64_t seed, const std::string& text, std::size_t dim = 64);

// Replies computed by a caller-supplied function.
class FunctionBackend : public Backend {
 public:
  using ChatFn = std::function<std::string(const ChatRequest&)>;
  using EmbedFn = std::function<Embedding(const std::string&)>;

  explicit FunctionBackend(ChatFn chat, EmbedFn embed = {}, std::uint64_t seed = 0);

  std::string chat(const ChatRequest& req) override;
  std::vector<Embedding> embed(const std::vector<std::string>& texts,
                               const std::string& model_tag) override;

 private:
  ChatFn chat_;
  EmbedFn embed_;
  std::uint64_t seed_;
};

// Replies looked up by fnv1a64(request_key). Unknown keys get a reply derived
// from the hash, so output is byte-identical across runs.
class HashMockBackend : public Backend {
 public:
  explicit HashMockBackend(std::uint64_t seed = 0) : seed_(seed) {}

  void set_reply(const ChatRequest& req, std::string reply);
  static std::uint64_t key_of(const ChatRequest& req);

  std::string chat(const ChatRequest& req) override;
  std::vector<Embedding> embed(const std::vector<std::string>& texts,
                               const std::string& model_tag) override;

 private:
  std::uint64_t seed_;
  std::mutex mutex_;
  std::map<std::uint64_t, std::string> replies_;
};

// Regex pattern -> reply sequence, consumed in order. Patterns are tried in
// insertion order against "<purpose>\n<prompt text>". An unmatched prompt or
// an exhausted sequence raises a non-retryable TransportError.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::uint64_t seed = 0) : seed_(seed) {}

  void add(const std::string& pattern, std::vector<std::string> replies);
  void reset();
  // Replies consumed so far for the pattern.
  std::size_t consumed(const std::string& pattern) const;

  std::string chat(const ChatRequest& req) override;
  std::vector<Embedding> embed(const std::vector<std::string>& texts,
                               const std::string& model_tag) override;

 private:
  struct Script {
    std::string pattern;
    std::regex re;
    std::vector<std::string> replies;
    std::size_t next = 0;
  };
  std::uint64_t seed_;
  mutable std::mutex mutex_;
  std::vector<Script> scripts_;
};

}  // namespace jf::gateway
