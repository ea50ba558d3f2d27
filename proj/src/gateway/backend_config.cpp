#include "jf/gateway/backend_config.hpp"

#include <cstdlib>

#include "jf/core/error.hpp"

namespace jf::gateway {
namespace {

template <typename T>
void read(const Json& table, const char* key, T& slot) {
  if (!table.is_object() || !table.contains(key)) return;
  try {
    slot = table.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("backend config: wrong type for ") + key);
  }
}

void override_from(const EnvLookup& env, const char* name, std::string& slot) {
  if (auto v = env(name); v && !v->empty()) slot = *v;
}

}  // namespace

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    return v ? std::optional<std::string>(v) : std::nullopt;
  };
}

BackendConfig backend_config_from(const Json& table, const EnvLookup& env) {
  BackendConfig cfg;
  read(table, "base_url", cfg.base_url);
  read(table, "auth_token_env_name", cfg.auth_token_env_name);
  read(table, "max_parallel", cfg.max_parallel);
  read(table, "timeout_ms", cfg.timeout_ms);
  read(table, "requests_per_second", cfg.requests_per_second);
  read(table, "burst", cfg.burst);
  if (table.is_object() && table.contains("retry")) {
    const Json& r = table.at("retry");
    read(r, "max_attempts", cfg.retry.max_attempts);
    read(r, "backoff_base_ms", cfg.retry.backoff_base_ms);
    read(r, "backoff_factor", cfg.retry.backoff_factor);
    read(r, "backoff_max_ms", cfg.retry.backoff_max_ms);
  }
  override_from(env, "JF_API_BASE", cfg.base_url);
  override_from(env, "JF_API_KEY_ENV", cfg.auth_token_env_name);
  validate(cfg);
  return cfg;
}

ModelTags model_tags_from(const Json& table, const EnvLookup& env) {
  ModelTags tags;
  read(table, "gen", tags.gen);
  read(table, "eval", tags.eval);
  read(table, "para", tags.para);
  read(table, "embed", tags.embed);
  override_from(env, "JF_MODEL_GEN", tags.gen);
  override_from(env, "JF_MODEL_EVAL", tags.eval);
  override_from(env, "JF_MODEL_PARA", tags.para);
  override_from(env, "JF_MODEL_EMBED", tags.embed);
  return tags;
}

}  // namespace jf::gateway
