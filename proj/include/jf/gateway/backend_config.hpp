#pragma once

#include <functional>
#include <optional>
#include <string>

#include "jf/gateway/gateway.hpp"

namespace jf::gateway {

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_env();

struct ModelTags {
  std::string gen;
  std::string eval;
  std::string para;
  std::string embed;
};

// Reads a [backend] table shaped like BackendConfig:
//   base_url, auth_token_env_name, max_parallel, timeout_ms,
//   requests_per_second, burst, [backend.retry] max_attempts, backoff_base_ms
// then applies JF_API_BASE and JF_API_KEY_ENV overrides.
BackendConfig backend_config_from(const Json& table, const EnvLookup& env = process_env());

// [models] gen/eval/para/embed with JF_MODEL_GEN, JF_MODEL_EVAL,
// JF_MODEL_PARA, JF_MODEL_EMBED overrides.
ModelTags model_tags_from(const Json& table, const EnvLookup& env = process_env());

}  // namespace jf::gateway
