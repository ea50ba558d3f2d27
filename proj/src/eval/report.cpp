#include "jf/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "jf/core/error.hpp"

namespace jf::eval {
namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

}  // namespace

void MetricReport::merge(const MetricReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  provenance.insert(provenance.end(), other.provenance.begin(), other.provenance.end());
  for (const auto& [k, v] : other.extra.items()) extra[k] = v;
}

const metrics::MetricValue* MetricReport::find(const std::string& model, const std::string& dataset,
                                               const std::string& metric) const {
  for (const auto& row : rows) {
    if (row.model != model || row.dataset != dataset) continue;
    for (const auto& m : row.metrics) {
      if (m.name == metric) return &m;
    }
  }
  return nullptr;
}

std::string format_value(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

Json to_json(const metrics::MetricValue& v) {
  return Json{{"name", v.name},
              {"value", v.value ? Json(*v.value) : Json(nullptr)},
              {"support", v.support},
              {"skipped", v.skipped}};
}

metrics::MetricValue metric_value_from_json(const Json& j) {
  metrics::MetricValue v;
  v.name = j.at("name").get<std::string>();
  if (!j.at("value").is_null()) v.value = j.at("value").get<double>();
  v.support = j.at("support").get<std::size_t>();
  v.skipped = j.at("skipped").get<std::size_t>();
  return v;
}

Json to_json(const MetricReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json ms = Json::array();
    for (const auto& m : row.metrics) ms.push_back(to_json(m));
    rows.push_back({{"model", row.model},
                    {"dataset", row.dataset},
                    {"protocol", row.protocol},
                    {"items", row.items},
                    {"metrics", ms}});
  }
  return Json{{"rows", rows}, {"provenance", r.provenance}, {"extra", r.extra}};
}

MetricReport report_from_json(const Json& j) {
  MetricReport r;
  try {
    for (const auto& row : j.at("rows")) {
      ReportRow out;
      out.model = row.at("model").get<std::string>();
      out.dataset = row.at("dataset").get<std::string>();
      out.protocol = row.at("protocol").get<std::string>();
      out.items = row.at("items").get<std::size_t>();
      for (const auto& m : row.at("metrics")) out.metrics.push_back(metric_value_from_json(m));
      r.rows.push_back(std::move(out));
    }
    r.provenance = j.at("provenance").get<std::vector<std::string>>();
    if (j.contains("extra")) r.extra = j.at("extra");
  } catch (const Json::exception& e) {
    throw ValidationError("report", std::string("malformed report: ") + e.what());
  }
  return r;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "md" || s == "markdown") return ReportFormat::markdown;
  if (s == "csv") return ReportFormat::csv;
  throw ConfigError("unknown report format: " + std::string(s));
}

std::string emit_report(const MetricReport& report, ReportFormat format) {
  std::vector<const ReportRow*> rows;
  for (const auto& r : report.rows) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow* a, const ReportRow* b) {
    return std::tie(a->protocol, a->model, a->dataset) < std::tie(b->protocol, b->model, b->dataset);
  });
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << "model,dataset,protocol,metric,value,support,skipped\n";
    for (const auto* row : rows) {
      for (const auto& m : row->metrics) {
        out << csv_field(row->model) << ',' << csv_field(row->dataset) << ',' << row->protocol << ','
            << csv_field(m.name) << ',' << (m.value ? format_value(m.value) : "") << ',' << m.support << ','
            << m.skipped << '\n';
      }
    }
    return out.str();
  }
  out << "# Evaluation report\n";
  if (rows.empty()) {
    out << "\n| Model | Dataset | Items |\n|---|---|---|\n";
    return out.str();
  }
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    std::vector<std::string> names;
    while (j < rows.size() && rows[j]->protocol == rows[i]->protocol) {
      for (const auto& m : rows[j]->metrics) {
        if (std::find(names.begin(), names.end(), m.name) == names.end()) names.push_back(m.name);
      }
      ++j;
    }
    out << "\n## " << rows[i]->protocol << "\n\n| Model | Dataset | Items |";
    for (const auto& n : names) out << ' ' << md_cell(n) << " |";
    out << "\n|---|---|---|";
    for (std::size_t k = 0; k < names.size(); ++k) out << "---|";
    out << '\n';
    for (std::size_t r = i; r < j; ++r) {
      out << "| " << md_cell(rows[r]->model) << " | " << md_cell(rows[r]->dataset) << " | " << rows[r]->items
          << " |";
      for (const auto& n : names) {
        const auto it = std::find_if(rows[r]->metrics.begin(), rows[r]->metrics.end(),
                                     [&](const metrics::MetricValue& m) { return m.name == n; });
        if (it == rows[r]->metrics.end()) {
          out << " |";
          continue;
        }
        out << ' ' << format_value(it->value);
        if (it->skipped > 0) out << " (skipped " << it->skipped << ')';
        out << " |";
      }
      out << '\n';
    }
    i = j;
  }
  return out.str();
}

MetricReport collect_reports(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> paths;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() == "report.json") paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  MetricReport out;
  for (const auto& p : paths) {
    std::ifstream in(p);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ValidationError(p.string(), std::string("malformed report: ") + e.what());
    }
    out.merge(report_from_json(j));
  }
  return out;
}

}  // namespace jf::eval
