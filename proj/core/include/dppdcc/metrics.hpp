#pragma once

#include <span>
#include <stdexcept>

namespace dppdcc::metrics {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mean absolute error of log-space values.
double male(std::span<const double> labels, std::span<const double> predictions);

// 1 - SSE / SST. Needs at least two labels with nonzero variance.
double log_r2(std::span<const double> labels, std::span<const double> predictions);

}  // namespace dppdcc::metrics
