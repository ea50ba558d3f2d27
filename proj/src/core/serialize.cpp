#include "jf/core/serialize.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>

#include "jf/core/error.hpp"

namespace jf {
namespace {

// Pulls known fields out of a JSON object and keeps the rest as extras.
class FieldReader {
 public:
  FieldReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_, "expected object");
  }

  const Json& required(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) throw ValidationError(at(key), "missing field");
    return *it;
  }

  const Json* optional(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string string(const std::string& key) {
    const Json& v = required(key);
    if (!v.is_string()) throw ValidationError(at(key), "expected string");
    return v.get<std::string>();
  }

  std::int64_t integer(const std::string& key) {
    const Json& v = required(key);
    if (!v.is_number_integer()) throw ValidationError(at(key), "expected integer");
    return v.get<std::int64_t>();
  }

  int small_int(const std::string& key) { return static_cast<int>(integer(key)); }

  bool boolean(const std::string& key) {
    const Json& v = required(key);
    if (!v.is_boolean()) throw ValidationError(at(key), "expected boolean");
    return v.get<bool>();
  }

  const Json& array(const std::string& key) {
    const Json& v = required(key);
    if (!v.is_array()) throw ValidationError(at(key), "expected array");
    return v;
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  Json extras() const {
    Json out = Json::object();
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) out[k] = v;
    }
    return out;
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void append_extras(Json& out, const Json& extra) {
  for (const auto& [k, v] : extra.items()) {
    if (!out.contains(k)) out[k] = v;
  }
}

template <typename T>
std::vector<T> read_list(FieldReader& r, const std::string& key,
                         T (*one)(const Json&, const std::string&)) {
  std::vector<T> out;
  const Json& arr = r.array(key);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(one(arr[i], r.at(key) + "[" + std::to_string(i) + "]"));
  }
  return out;
}

BBox read_bbox(const Json& j, const std::string& path) {
  FieldReader r(j, path);
  BBox b;
  b.x1 = r.small_int("x1");
  b.y1 = r.small_int("y1");
  b.x2 = r.small_int("x2");
  b.y2 = r.small_int("y2");
  b.ref_exp = r.string("ref_exp");
  b.extra = r.extras();
  return b;
}

FlagEntry read_flag(const Json& j, const std::string& path) {
  FieldReader r(j, path);
  FlagEntry f;
  f.flag_name = r.string("flag_name");
  f.bboxes = read_list<BBox>(r, "bboxes", read_bbox);
  f.extra = r.extras();
  return f;
}

ReasoningResponse read_response(const Json& j, const std::string& path) {
  FieldReader r(j, path);
  ReasoningResponse v;
  v.text = r.string("text");
  v.intended_rating = r.small_int("intended_rating");
  v.variant_index = r.small_int("variant_index");
  try {
    v.origin = parse_origin(r.string("origin"));
  } catch (const ValidationError& e) {
    throw ValidationError(r.at("origin"), e.what());
  }
  v.iteration = r.small_int("iteration");
  if (const Json* low = r.optional("low_diversity")) {
    if (!low->is_boolean()) throw ValidationError(r.at("low_diversity"), "expected boolean");
    v.low_diversity = low->get<bool>();
  }
  v.extra = r.extras();
  return v;
}

EvalTrace read_trace(const Json& j, const std::string& path) {
  FieldReader r(j, path);
  EvalTrace t;
  t.candidate_rating = r.small_int("candidate_rating");
  t.predicted_rating = r.small_int("predicted_rating");
  t.deviation = r.small_int("deviation");
  t.feedback = r.string("feedback");
  t.iteration = r.small_int("iteration");
  t.extra = r.extras();
  return t;
}

}  // namespace

std::string format_timestamp(Timestamp t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':' || text[19] != 'Z') {
    throw ValidationError("created_at", "expected YYYY-MM-DDTHH:MM:SSZ");
  }
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9, 11, 12, 14, 15, 17, 18}) {
    if (text[i] < '0' || text[i] > '9') {
      throw ValidationError("created_at", "expected YYYY-MM-DDTHH:MM:SSZ");
    }
  }
  auto num = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (text[i] - '0');
    return v;
  };
  std::tm tm{};
  tm.tm_year = num(0, 4) - 1900;
  tm.tm_mon = num(5, 2) - 1;
  tm.tm_mday = num(8, 2);
  tm.tm_hour = num(11, 2);
  tm.tm_min = num(14, 2);
  tm.tm_sec = num(17, 2);
  const int mon = tm.tm_mon, mday = tm.tm_mday;
  const std::time_t tt = timegm(&tm);
  // timegm normalizes out-of-range fields; a changed month/day means invalid input.
  if (tm.tm_mon != mon || tm.tm_mday != mday || num(11, 2) > 23 || num(14, 2) > 59 ||
      num(17, 2) > 59) {
    throw ValidationError("created_at", "invalid calendar time");
  }
  return std::chrono::time_point_cast<std::chrono::seconds>(
      std::chrono::system_clock::from_time_t(tt));
}

Json to_json(const BBox& v) {
  Json j = Json::object();
  j["x1"] = v.x1;
  j["y1"] = v.y1;
  j["x2"] = v.x2;
  j["y2"] = v.y2;
  j["ref_exp"] = v.ref_exp;
  append_extras(j, v.extra);
  return j;
}

Json to_json(const Sample& v) {
  Json j = Json::object();
  j["id"] = v.id;
  j["image_ref"] = v.image_ref;
  j["label"] = std::string(to_string(v.label));
  j["edited_regions"] = Json::array();
  for (const auto& b : v.edited_regions) j["edited_regions"].push_back(to_json(b));
  j["source"] = std::string(to_string(v.source));
  j["seed_tag"] = v.seed_tag;
  append_extras(j, v.extra);
  return j;
}

Json to_json(const FlagEntry& v) {
  Json j = Json::object();
  j["flag_name"] = v.flag_name;
  j["bboxes"] = Json::array();
  for (const auto& b : v.bboxes) j["bboxes"].push_back(to_json(b));
  append_extras(j, v.extra);
  return j;
}

Json to_json(const HumanAnnotation& v) {
  Json j = Json::object();
  j["sample_id"] = v.sample_id;
  j["annotator_id"] = v.annotator_id;
  j["flags"] = Json::array();
  for (const auto& f : v.flags) j["flags"].push_back(to_json(f));
  j["created_at"] = format_timestamp(v.created_at);
  append_extras(j, v.extra);
  return j;
}

Json to_json(const ReasoningResponse& v) {
  Json j = Json::object();
  j["text"] = v.text;
  j["intended_rating"] = v.intended_rating;
  j["variant_index"] = v.variant_index;
  j["origin"] = std::string(to_string(v.origin));
  j["iteration"] = v.iteration;
  j["low_diversity"] = v.low_diversity;
  append_extras(j, v.extra);
  return j;
}

Json to_json(const EvalTrace& v) {
  Json j = Json::object();
  j["candidate_rating"] = v.candidate_rating;
  j["predicted_rating"] = v.predicted_rating;
  j["deviation"] = v.deviation;
  j["feedback"] = v.feedback;
  j["iteration"] = v.iteration;
  append_extras(j, v.extra);
  return j;
}

Json to_json(const BootstrapRecord& v) {
  Json j = Json::object();
  j["sample_id"] = v.sample_id;
  j["image_ref"] = v.image_ref;
  j["label"] = std::string(to_string(v.label));
  j["complete"] = v.complete;
  j["gold"] = v.gold ? to_json(*v.gold) : Json(nullptr);
  j["gold_variants"] = Json::array();
  for (const auto& r : v.gold_variants) j["gold_variants"].push_back(to_json(r));
  j["accepted"] = Json::object();
  for (const auto& [rating, list] : v.accepted) {
    Json arr = Json::array();
    for (const auto& r : list) arr.push_back(to_json(r));
    j["accepted"][std::to_string(rating)] = std::move(arr);
  }
  j["diagnostics"] = Json::array();
  for (const auto& t : v.diagnostics) j["diagnostics"].push_back(to_json(t));
  j["notes"] = v.notes;
  append_extras(j, v.extra);
  return j;
}

template <>
BBox from_json<BBox>(const Json& j) {
  return read_bbox(j, "");
}

template <>
Sample from_json<Sample>(const Json& j) {
  FieldReader r(j, "");
  Sample s;
  s.id = r.string("id");
  s.image_ref = r.string("image_ref");
  s.label = parse_label(r.string("label"));
  s.edited_regions = read_list<BBox>(r, "edited_regions", read_bbox);
  s.source = parse_source(r.string("source"));
  s.seed_tag = r.integer("seed_tag");
  s.extra = r.extras();
  return s;
}

template <>
FlagEntry from_json<FlagEntry>(const Json& j) {
  return read_flag(j, "");
}

template <>
HumanAnnotation from_json<HumanAnnotation>(const Json& j) {
  FieldReader r(j, "");
  HumanAnnotation a;
  a.sample_id = r.string("sample_id");
  a.annotator_id = r.string("annotator_id");
  a.flags = read_list<FlagEntry>(r, "flags", read_flag);
  a.created_at = parse_timestamp(r.string("created_at"));
  a.extra = r.extras();
  return a;
}

template <>
ReasoningResponse from_json<ReasoningResponse>(const Json& j) {
  return read_response(j, "");
}

template <>
EvalTrace from_json<EvalTrace>(const Json& j) {
  return read_trace(j, "");
}

template <>
BootstrapRecord from_json<BootstrapRecord>(const Json& j) {
  FieldReader r(j, "");
  BootstrapRecord rec;
  rec.sample_id = r.string("sample_id");
  rec.image_ref = r.string("image_ref");
  rec.label = parse_label(r.string("label"));
  rec.complete = r.boolean("complete");
  const Json& gold = r.required("gold");
  if (!gold.is_null()) rec.gold = read_response(gold, "gold");
  rec.gold_variants = read_list<ReasoningResponse>(r, "gold_variants", read_response);
  const Json& accepted = r.required("accepted");
  if (!accepted.is_object()) throw ValidationError("accepted", "expected object");
  for (const auto& [key, arr] : accepted.items()) {
    int rating = 0;
    try {
      std::size_t used = 0;
      rating = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ValidationError("accepted." + key, "rating key must be an integer");
    }
    if (!arr.is_array()) throw ValidationError("accepted." + key, "expected array");
    auto& list = rec.accepted[rating];
    for (std::size_t i = 0; i < arr.size(); ++i) {
      list.push_back(read_response(arr[i], "accepted." + key + "[" + std::to_string(i) + "]"));
    }
  }
  rec.diagnostics = read_list<EvalTrace>(r, "diagnostics", read_trace);
  const Json& notes = r.array("notes");
  for (const auto& n : notes) {
    if (!n.is_string()) throw ValidationError("notes", "expected strings");
    rec.notes.push_back(n.get<std::string>());
  }
  rec.extra = r.extras();
  return rec;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<Json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno), e.what());
    }
  }
  return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& row : rows) out << row.dump() << '\n';
}

}  // namespace jf
