#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "jf/core/types.hpp"
#include "jf/metrics/metric_value.hpp"

namespace jf::eval {

struct ReportRow {
  std::string model;
  std::string dataset;
  std::string protocol;
  std::vector<metrics::MetricValue> metrics;
  // Items in the dataset slice; each metric satisfies support + skipped = items.
  std::size_t items = 0;

  bool operator==(const ReportRow&) const = default;
};

struct MetricReport {
  std::vector<ReportRow> rows;
  // Run config hashes of every contributing run, in row order.
  std::vector<std::string> provenance;
  Json extra = Json::object();

  bool operator==(const MetricReport&) const = default;

  void merge(const MetricReport& other);
  const metrics::MetricValue* find(const std::string& model, const std::string& dataset,
                                   const std::string& metric) const;
};

Json to_json(const metrics::MetricValue& v);
metrics::MetricValue metric_value_from_json(const Json& j);
Json to_json(const MetricReport& r);
MetricReport report_from_json(const Json& j);

enum class ReportFormat { markdown, csv };
ReportFormat parse_report_format(std::string_view s);

// Rows are sorted by (protocol, model, dataset); markdown gets one table per protocol.
std::string emit_report(const MetricReport& report, ReportFormat format);

// Every report.json below `dir`, merged in path order.
MetricReport collect_reports(const std::filesystem::path& dir);

std::string format_value(const std::optional<double>& v);

}  // namespace jf::eval
