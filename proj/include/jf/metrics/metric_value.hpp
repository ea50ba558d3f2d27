#pragma once

#include <cstddef>
#include <optional>
#include <string>

namespace jf::metrics {

// One reported number. `value` is empty when the metric is undefined on the
// scored instances (e.g. a correlation against a constant series).
struct MetricValue {
  std::string name;
  std::optional<double> value;
  std::size_t support = 0;
  std::size_t skipped = 0;

  bool operator==(const MetricValue&) const = default;
};

}  // namespace jf::metrics
