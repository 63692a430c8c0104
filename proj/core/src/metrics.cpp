#include "dppdcc/metrics.hpp"

#include <cmath>
#include <string>

namespace dppdcc::metrics {

namespace {

void check(std::span<const double> labels, std::span<const double> predictions, const char* what) {
  if (labels.size() != predictions.size()) {
    throw MetricError(std::string(what) + ": " + std::to_string(labels.size()) + " labels vs " +
                      std::to_string(predictions.size()) + " predictions");
  }
  if (labels.empty()) throw MetricError(std::string(what) + ": empty input");
}

}  // namespace

double male(std::span<const double> labels, std::span<const double> predictions) {
  check(labels, predictions, "male");
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) s += std::abs(labels[i] - predictions[i]);
  return s / static_cast<double>(labels.size());
}

double log_r2(std::span<const double> labels, std::span<const double> predictions) {
  check(labels, predictions, "log_r2");
  if (labels.size() < 2) throw MetricError("log_r2: need at least two samples");
  double mean = 0.0;
  for (double y : labels) mean += y;
  mean /= static_cast<double>(labels.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sse += (labels[i] - predictions[i]) * (labels[i] - predictions[i]);
    sst += (labels[i] - mean) * (labels[i] - mean);
  }
  if (sst == 0.0) throw MetricError("log_r2: labels have zero variance");
  return 1.0 - sse / sst;
}

}  // namespace dppdcc::metrics
