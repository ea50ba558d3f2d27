#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "jf/core/error.hpp"
#include "jf/core/types.hpp"

namespace jf {

std::string format_timestamp(Timestamp t);
// Accepts the canonical "YYYY-MM-DDTHH:MM:SSZ" form only.
Timestamp parse_timestamp(std::string_view text);

Json to_json(const BBox& v);
Json to_json(const Sample& v);
Json to_json(const FlagEntry& v);
Json to_json(const HumanAnnotation& v);
Json to_json(const ReasoningResponse& v);
Json to_json(const EvalTrace& v);
Json to_json(const BootstrapRecord& v);

template <typename T>
T from_json(const Json& j);

template <>
BBox from_json<BBox>(const Json& j);
template <>
Sample from_json<Sample>(const Json& j);
template <>
FlagEntry from_json<FlagEntry>(const Json& j);
template <>
HumanAnnotation from_json<HumanAnnotation>(const Json& j);
template <>
ReasoningResponse from_json<ReasoningResponse>(const Json& j);
template <>
EvalTrace from_json<EvalTrace>(const Json& j);
template <>
BootstrapRecord from_json<BootstrapRecord>(const Json& j);

// One canonical JSON line (no trailing newline). Validates first.
template <typename T>
std::string serialize_record(const T& value) {
  validate(value);
  return to_json(value).dump(-1, ' ', false, Json::error_handler_t::strict);
}

template <typename T>
T parse_record(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw ValidationError("", std::string("malformed record: ") + e.what());
  }
  T value = from_json<T>(j);
  validate(value);
  return value;
}

// Line-delimited files. Blank lines are skipped on read.
std::vector<Json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);

template <typename T>
std::vector<T> read_records(const std::filesystem::path& path) {
  std::vector<T> out;
  for (const auto& j : read_jsonl(path)) {
    T value = from_json<T>(j);
    validate(value);
    out.push_back(std::move(value));
  }
  return out;
}

template <typename T>
void write_records(const std::filesystem::path& path, const std::vector<T>& values) {
  std::vector<Json> rows;
  rows.reserve(values.size());
  for (const auto& v : values) {
    validate(v);
    rows.push_back(to_json(v));
  }
  write_jsonl(path, rows);
}

}  // namespace jf
