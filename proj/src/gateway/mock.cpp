#include "jf/gateway/mock.hpp"

#include <cstdio>

#include "jf/core/error.hpp"
#include "jf/core/rng.hpp"

namespace jf::gateway {
namespace {

std::vector<Embedding> hash_embed_all(std::uint64_t seed, const std::vector<std::string>& texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hash_embedding(seed, t));
  return out;
}

}  // namespace

Embedding hash_embedding(std::uint64_t seed, const std::string& text, std::size_t dim) {
  Rng rng(derive_seed(seed, text));
  Embedding v(dim);
  for (auto& x : v) {
    // Uniform in [-1, 1) from the top 53 bits.
    x = static_cast<double>(rng.next() >> 11) * 0x1.0p-52 - 1.0;
  }
  return v;
}

FunctionBackend::FunctionBackend(ChatFn chat, EmbedFn embed, std::uint64_t seed)
    : chat_(std::move(chat)), embed_(std::move(embed)), seed_(seed) {}

std::string FunctionBackend::chat(const ChatRequest& req) { return chat_(req); }

std::vector<Embedding> FunctionBackend::embed(const std::vector<std::string>& texts,
                                              const std::string&) {
  if (!embed_) return hash_embed_all(seed_, texts);
  std::vector<Embedding> out;
  for (const auto& t : texts) out.push_back(embed_(t));
  return out;
}

std::uint64_t HashMockBackend::key_of(const ChatRequest& req) { return fnv1a64(request_key(req)); }

void HashMockBackend::set_reply(const ChatRequest& req, std::string reply) {
  std::lock_guard lock(mutex_);
  replies_[key_of(req)] = std::move(reply);
}

std::string HashMockBackend::chat(const ChatRequest& req) {
  const auto key = key_of(req);
  {
    std::lock_guard lock(mutex_);
    if (auto it = replies_.find(key); it != replies_.end()) return it->second;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "mock-%016llx",
                static_cast<unsigned long long>(splitmix64(key ^ seed_)));
  return buf;
}

std::vector<Embedding> HashMockBackend::embed(const std::vector<std::string>& texts,
                                              const std::string&) {
  return hash_embed_all(seed_, texts);
}

void ScriptedBackend::add(const std::string& pattern, std::vector<std::string> replies) {
  std::lock_guard lock(mutex_);
  scripts_.push_back({pattern, std::regex(pattern), std::move(replies), 0});
}

void ScriptedBackend::reset() {
  std::lock_guard lock(mutex_);
  for (auto& s : scripts_) s.next = 0;
}

std::size_t ScriptedBackend::consumed(const std::string& pattern) const {
  std::lock_guard lock(mutex_);
  for (const auto& s : scripts_) {
    if (s.pattern == pattern) return s.next;
  }
  return 0;
}

std::string ScriptedBackend::chat(const ChatRequest& req) {
  const std::string subject = req.purpose + "\n" + prompt_text(req);
  std::lock_guard lock(mutex_);
  for (auto& s : scripts_) {
    if (!std::regex_search(subject, s.re)) continue;
    if (s.next >= s.replies.size()) {
      throw TransportError("script exhausted for pattern \"" + s.pattern + "\"", false);
    }
    return s.replies[s.next++];
  }
  throw TransportError("no script matches request (purpose \"" + req.purpose + "\")", false);
}

std::vector<Embedding> ScriptedBackend::embed(const std::vector<std::string>& texts,
                                              const std::string&) {
  return hash_embed_all(seed_, texts);
}

}  // namespace jf::gateway
