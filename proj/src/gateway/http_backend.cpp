#include "jf/gateway/http_backend.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "jf/core/error.hpp"

namespace jf::gateway {
namespace {

std::string mime_for(const std::string& path) {
  auto ends = [&](const char* ext) {
    const std::string e(ext);
    return path.size() >= e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0;
  };
  if (ends(".png") || ends(".PNG")) return "image/png";
  if (ends(".webp")) return "image/webp";
  if (ends(".gif")) return "image/gif";
  return "image/jpeg";
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string image_url_for(const std::string& image_ref) {
  if (image_ref.rfind("http://", 0) == 0 || image_ref.rfind("https://", 0) == 0 ||
      image_ref.rfind("data:", 0) == 0) {
    return image_ref;
  }
  std::ifstream in(image_ref, std::ios::binary);
  if (!in) throw TransportError("cannot read image " + image_ref, false);
  std::ostringstream buf;
  buf << in.rdbuf();
  return "data:" + mime_for(image_ref) + ";base64," + base64_encode(buf.str());
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

struct HttpBackend::Impl {
  std::unique_ptr<httplib::Client> client;
  std::string prefix;
  std::string token;
};

HttpBackend::HttpBackend(BackendConfig config, const EnvLookup& env)
    : impl_(std::make_unique<Impl>()) {
  validate(config);
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config.base_url, m, url_re)) {
    throw ConfigError("backend: base_url must look like http(s)://host[:port][/prefix]");
  }
  impl_->client = std::make_unique<httplib::Client>(m[1].str());
  impl_->prefix = m[2].matched ? m[2].str() : "";
  while (!impl_->prefix.empty() && impl_->prefix.back() == '/') impl_->prefix.pop_back();
  const auto ms = std::chrono::milliseconds(config.timeout_ms);
  impl_->client->set_connection_timeout(ms);
  impl_->client->set_read_timeout(ms);
  impl_->client->set_write_timeout(ms);
  if (!config.auth_token_env_name.empty()) {
    if (auto token = env(config.auth_token_env_name)) impl_->token = *token;
  }
  if (!impl_->token.empty()) impl_->client->set_bearer_token_auth(impl_->token);
}

HttpBackend::~HttpBackend() = default;

Json HttpBackend::chat_body(const ChatRequest& req) {
  Json body = Json::object();
  body["model"] = req.model_tag;
  body["messages"] = Json::array();
  for (const auto& m : req.messages) {
    Json content = Json::array();
    content.push_back({{"type", "text"}, {"text", m.text}});
    if (m.image_ref) {
      content.push_back({{"type", "image_url"}, {"image_url", {{"url", image_url_for(*m.image_ref)}}}});
    }
    body["messages"].push_back({{"role", m.role}, {"content", content}});
  }
  body["temperature"] = req.temperature;
  body["max_tokens"] = req.max_tokens;
  if (req.request_seed) body["seed"] = *req.request_seed;
  return body;
}

Json HttpBackend::embed_body(const std::vector<std::string>& texts, const std::string& model_tag) {
  return Json{{"model", model_tag}, {"input", texts}};
}

Json HttpBackend::post(const std::string& path, const Json& body) {
  auto res = impl_->client->Post(impl_->prefix + path, body.dump(), "application/json");
  if (!res) {
    throw TransportError("http " + path + ": " + httplib::to_string(res.error()), true);
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("http " + path + ": status " + std::to_string(res->status),
                         retryable_status(res->status), res->status);
  }
  try {
    return Json::parse(res->body);
  } catch (const Json::parse_error& e) {
    throw TransportError("http " + path + ": malformed JSON reply", true, res->status);
  }
}

std::string HttpBackend::chat(const ChatRequest& req) {
  const Json reply = post("/chat/completions", chat_body(req));
  try {
    const Json& content = reply.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some servers return content parts.
    std::string text;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  } catch (const Json::exception&) {
    throw TransportError("chat reply without choices[0].message.content", false);
  }
}

std::vector<Embedding> HttpBackend::embed(const std::vector<std::string>& texts,
                                          const std::string& model_tag) {
  const Json reply = post("/embeddings", embed_body(texts, model_tag));
  std::vector<Embedding> out;
  try {
    for (const auto& item : reply.at("data")) out.push_back(item.at("embedding").get<Embedding>());
  } catch (const Json::exception&) {
    throw TransportError("embedding reply without data[].embedding", false);
  }
  return out;
}

}  // namespace jf::gateway
