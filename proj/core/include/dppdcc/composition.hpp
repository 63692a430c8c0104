#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dppdcc/corpus.hpp"
#include "dppdcc/splits.hpp"

namespace dppdcc::composition {

// One exported prediction.
struct BreakdownRow {
  std::string paper_id;
  corpus::TimeStep pub_time = 0;
  splits::Category category = splits::Category::kFresh;
  double dif = 0.0, con = 0.0, contribution = 0.0, total = 0.0;
  double label = 0.0;
};

// Per-sample shares in percent, in the order dif, con, contribution.
using Shares = std::array<double, 3>;

struct CompositionGroup {
  std::string key;
  std::size_t n = 0;
  Shares mean{};
  Shares stddev{};  // population standard deviation
  std::optional<double> lower, upper;  // value bins only
};

struct NegativeSummary {
  std::size_t negative = 0;             // samples with any negative component
  std::size_t min_is_contribution = 0;  // of those, contribution is the smallest
  double share = 0.0;                   // min_is_contribution / negative, 0 when none
};

struct CompositionTables {
  std::size_t positive = 0;  // samples with every component > 0
  std::size_t other = 0;     // neither positive nor negative (some component exactly 0)
  std::vector<Shares> shares;            // per positive sample, input order
  std::vector<std::size_t> positive_rows;  // input index of each entry in `shares`
  std::vector<CompositionGroup> by_time, by_category, by_value;
  NegativeSummary negative;
};

Shares shares_of(double dif, double con, double contribution);

// Groups the all-positive cohort by publication time, category and
// equal-width bins of the predicted total.
CompositionTables report_composition(std::span<const BreakdownRow> rows, int value_bins = 5);

// CSV: paper_id,pub_time,category,dif,con,contribution,total,label
void write_breakdowns(const std::filesystem::path& file, std::span<const BreakdownRow> rows);
std::vector<BreakdownRow> read_breakdowns(const std::filesystem::path& file);

// composition_by_time.csv, composition_by_category.csv,
// composition_by_value.csv, composition_negative.csv
void write_tables(const CompositionTables& t, const std::filesystem::path& dir);

}  // namespace dppdcc::composition
