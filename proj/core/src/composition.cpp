#include "dppdcc/composition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dppdcc::composition {

Shares shares_of(double dif, double con, double contribution) {
  const double total = dif + con + contribution;
  if (!(total > 0.0)) throw std::invalid_argument("shares_of: components must sum to a positive value");
  return {100.0 * dif / total, 100.0 * con / total, 100.0 * contribution / total};
}

namespace {

CompositionGroup summarize(std::string key, const std::vector<const Shares*>& members) {
  CompositionGroup g;
  g.key = std::move(key);
  g.n = members.size();
  if (members.empty()) return g;
  for (const Shares* s : members) {
    for (int k = 0; k < 3; ++k) g.mean[k] += (*s)[k];
  }
  for (double& m : g.mean) m /= static_cast<double>(g.n);
  for (const Shares* s : members) {
    for (int k = 0; k < 3; ++k) g.stddev[k] += ((*s)[k] - g.mean[k]) * ((*s)[k] - g.mean[k]);
  }
  for (double& v : g.stddev) v = std::sqrt(v / static_cast<double>(g.n));
  return g;
}

}  // namespace

CompositionTables report_composition(std::span<const BreakdownRow> rows, int value_bins) {
  if (value_bins < 1) throw std::invalid_argument("report_composition: value_bins must be >= 1");
  CompositionTables t;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.dif > 0.0 && r.con > 0.0 && r.contribution > 0.0) {
      t.shares.push_back(shares_of(r.dif, r.con, r.contribution));
      t.positive_rows.push_back(i);
    } else if (r.dif < 0.0 || r.con < 0.0 || r.contribution < 0.0) {
      ++t.negative.negative;
      if (r.contribution < r.dif && r.contribution < r.con) ++t.negative.min_is_contribution;
    } else {
      ++t.other;
    }
  }
  t.positive = t.shares.size();
  if (t.negative.negative > 0) {
    t.negative.share = static_cast<double>(t.negative.min_is_contribution) / static_cast<double>(t.negative.negative);
  }

  std::map<corpus::TimeStep, std::vector<const Shares*>> by_time;
  std::map<int, std::vector<const Shares*>> by_category;
  for (std::size_t k = 0; k < t.shares.size(); ++k) {
    const auto& r = rows[t.positive_rows[k]];
    by_time[r.pub_time].push_back(&t.shares[k]);
    by_category[static_cast<int>(r.category)].push_back(&t.shares[k]);
  }
  for (const auto& [time, members] : by_time) t.by_time.push_back(summarize(std::to_string(time), members));
  for (const auto& [cat, members] : by_category) {
    t.by_category.push_back(summarize(splits::category_name(static_cast<splits::Category>(cat)), members));
  }

  if (!t.shares.empty()) {
    double lo = rows[t.positive_rows.front()].total, hi = lo;
    for (std::size_t i : t.positive_rows) {
      lo = std::min(lo, rows[i].total);
      hi = std::max(hi, rows[i].total);
    }
    const double width = (hi - lo) / value_bins;
    std::vector<std::vector<const Shares*>> bins(static_cast<std::size_t>(value_bins));
    for (std::size_t k = 0; k < t.shares.size(); ++k) {
      const double v = rows[t.positive_rows[k]].total;
      int b = width > 0.0 ? static_cast<int>(std::floor((v - lo) / width)) : 0;
      b = std::clamp(b, 0, value_bins - 1);
      bins[static_cast<std::size_t>(b)].push_back(&t.shares[k]);
    }
    for (int b = 0; b < value_bins; ++b) {
      CompositionGroup g = summarize(std::to_string(b), bins[static_cast<std::size_t>(b)]);
      g.lower = lo + width * b;
      g.upper = b + 1 == value_bins ? hi : lo + width * (b + 1);
      t.by_value.push_back(std::move(g));
    }
  }
  return t;
}

void write_breakdowns(const std::filesystem::path& file, std::span<const BreakdownRow> rows) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out.precision(17);
  out << "paper_id,pub_time,category,dif,con,contribution,total,label\n";
  for (const auto& r : rows) {
    out << r.paper_id << ',' << r.pub_time << ',' << splits::category_name(r.category) << ',' << r.dif << ','
        << r.con << ',' << r.contribution << ',' << r.total << ',' << r.label << '\n';
  }
}

std::vector<BreakdownRow> read_breakdowns(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::string line;
  std::getline(in, line);
  std::vector<BreakdownRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": expected 8 fields");
    BreakdownRow r;
    try {
      r.paper_id = f[0];
      r.pub_time = std::stoi(f[1]);
      r.category = splits::parse_category(f[2]);
      r.dif = std::stod(f[3]);
      r.con = std::stod(f[4]);
      r.contribution = std::stod(f[5]);
      r.total = std::stod(f[6]);
      r.label = std::stod(f[7]);
    } catch (const std::exception& e) {
      throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

void write_groups(const std::filesystem::path& file, const char* key_name, const std::vector<CompositionGroup>& groups,
                  bool bounds) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out.precision(12);
  out << key_name;
  if (bounds) out << ",lower,upper";
  out << ",n,dif_mean,dif_std,con_mean,con_std,contribution_mean,contribution_std\n";
  for (const auto& g : groups) {
    out << g.key;
    if (bounds) out << ',' << g.lower.value_or(0.0) << ',' << g.upper.value_or(0.0);
    out << ',' << g.n;
    for (int k = 0; k < 3; ++k) out << ',' << g.mean[k] << ',' << g.stddev[k];
    out << '\n';
  }
}

}  // namespace

void write_tables(const CompositionTables& t, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_groups(dir / "composition_by_time.csv", "pub_time", t.by_time, false);
  write_groups(dir / "composition_by_category.csv", "category", t.by_category, false);
  write_groups(dir / "composition_by_value.csv", "bin", t.by_value, true);
  std::ofstream out(dir / "composition_negative.csv", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write composition_negative.csv");
  out.precision(12);
  out << "positive,negative,other,min_is_contribution,min_is_contribution_share\n";
  out << t.positive << ',' << t.negative.negative << ',' << t.other << ',' << t.negative.min_is_contribution << ','
      << t.negative.share << '\n';
}

}  // namespace dppdcc::composition
