#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "dppdcc/composition.hpp"
#include "dppdcc/config.hpp"
#include "dppdcc/dataset.hpp"
#include "dppdcc/metrics.hpp"
#include "dppdcc/trainer.hpp"

using namespace dppdcc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("dppdcc_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

config::RunConfig tiny_run() {
  config::RunConfig c;
  c.synth.papers = 400;
  c.synth.seed = 5;
  c.embedding.dim = 8;
  c.window = 2;
  c.sampling.limits = {4, 2};
  c.split.test_point = 2010;
  c.split.max_train = 12;
  c.split.max_val = 6;
  c.split.n_test = 16;
  c.model.hidden_dim = 4;
  c.model.layers = 1;
  c.model.heads = 1;
  c.model.temporal_layers = 1;
  c.model.temporal_heads = 1;
  c.model.bins = 3;
  c.train.epochs = 3;
  c.train.batch_size = 4;
  c.train.learning_rate = 1e-2;
  c.train.seed = 3;
  return c;
}

struct Prepared {
  config::RunConfig config;
  pipeline::Workspace ws;
  pipeline::Dataset data;
};

Prepared prepare(const config::RunConfig& c) {
  Prepared p{c, pipeline::open_workspace(c), {}};
  p.data = pipeline::build_dataset(p.ws, splits::make_splits(*p.ws.net, c.split), c);
  return p;
}

composition::BreakdownRow row(double dif, double con, double ctr, splits::Category cat = splits::Category::kFresh,
                              int year = 2004, double label = 1.0) {
  composition::BreakdownRow r;
  r.paper_id = "x";
  r.pub_time = year;
  r.category = cat;
  r.dif = dif;
  r.con = con;
  r.contribution = ctr;
  r.total = (dif + con) + ctr;
  r.label = label;
  return r;
}

}  // namespace

TEST(Metrics, Examples) {
  std::vector<double> y{0, 2}, same{0, 2}, flat{1, 1}, swapped{2, 0};
  EXPECT_EQ(metrics::male(y, same), 0.0);
  EXPECT_DOUBLE_EQ(metrics::male(y, flat), 1.0);
  EXPECT_DOUBLE_EQ(metrics::log_r2(y, same), 1.0);
  EXPECT_DOUBLE_EQ(metrics::log_r2(y, flat), 0.0);
  EXPECT_DOUBLE_EQ(metrics::log_r2(y, swapped), -3.0);
  EXPECT_THROW(metrics::male(std::vector<double>{}, std::vector<double>{}), metrics::MetricError);
  EXPECT_THROW(metrics::male(y, std::vector<double>{1.0}), metrics::MetricError);
  EXPECT_THROW(metrics::log_r2(flat, y), metrics::MetricError);
}

TEST(Metrics, PairwiseShuffleInvariant) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> y(50), p(50);
  for (int i = 0; i < 50; ++i) {
    y[i] = g(rng);
    p[i] = g(rng);
  }
  const double m = metrics::male(y, p), r = metrics::log_r2(y, p);
  std::vector<std::size_t> idx(50);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<double> y2, p2;
  for (auto i : idx) {
    y2.push_back(y[i]);
    p2.push_back(p[i]);
  }
  EXPECT_NEAR(metrics::male(y2, p2), m, 1e-14);
  EXPECT_NEAR(metrics::log_r2(y2, p2), r, 1e-13);
}

TEST(Composition, SharesAndGroups) {
  auto s = composition::shares_of(1, 1, 2);
  EXPECT_DOUBLE_EQ(s[0], 25.0);
  EXPECT_DOUBLE_EQ(s[1], 25.0);
  EXPECT_DOUBLE_EQ(s[2], 50.0);
  std::vector<composition::BreakdownRow> same(6, row(0.2, 0.3, 0.5));
  auto t = composition::report_composition(same);
  EXPECT_EQ(t.positive, 6u);
  for (const auto* groups : {&t.by_time, &t.by_category}) {
    for (const auto& g : *groups) {
      for (double sd : g.stddev) EXPECT_EQ(sd, 0.0);
    }
  }
  ASSERT_EQ(t.by_value.size(), 5u);
  EXPECT_EQ(t.by_value[0].n, 6u);
}

TEST(Composition, NegativeCohortSeparated) {
  std::vector<composition::BreakdownRow> rows{row(1, 1, 2), row(0.5, 0.2, -0.1), row(-0.3, 0.2, 0.1),
                                              row(0.4, -0.2, -0.5), row(0.0, 1.0, 1.0)};
  auto t = composition::report_composition(rows);
  EXPECT_EQ(t.positive, 1u);
  EXPECT_EQ(t.other, 1u);
  EXPECT_EQ(t.negative.negative, 3u);
  EXPECT_EQ(t.negative.min_is_contribution, 2u);
  EXPECT_NEAR(t.negative.share, 2.0 / 3.0, 1e-15);
  for (const auto& sh : t.shares) EXPECT_NEAR(sh[0] + sh[1] + sh[2], 100.0, 1e-9);
}

TEST(Composition, ValueBinsAndCsvRoundTrip) {
  std::vector<composition::BreakdownRow> rows;
  for (int i = 0; i < 10; ++i) {
    auto r = row(0.1 * (i + 1), 0.2, 0.3 + 0.05 * i, static_cast<splits::Category>(i % 3), 2000 + i % 4, 0.1 * i);
    r.paper_id = "id" + std::to_string(i);
    rows.push_back(r);
  }
  auto t = composition::report_composition(rows, 3);
  std::size_t n = 0;
  for (const auto& g : t.by_value) n += g.n;
  EXPECT_EQ(n, 10u);
  EXPECT_EQ(t.by_value.front().lower.value(), rows.front().total);
  EXPECT_EQ(t.by_value.back().upper.value(), rows.back().total);

  auto dir = scratch("csv");
  composition::write_breakdowns(dir / "b.csv", rows);
  auto back = composition::read_breakdowns(dir / "b.csv");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].paper_id, rows[i].paper_id);
    EXPECT_EQ(back[i].category, rows[i].category);
    EXPECT_EQ(back[i].total, rows[i].total);
    EXPECT_EQ(back[i].contribution, rows[i].contribution);
  }
  composition::write_tables(t, dir);
  for (const char* f : {"composition_by_time.csv", "composition_by_category.csv", "composition_by_value.csv",
                        "composition_negative.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
}

TEST(Config, RoundTripAndOverrides) {
  auto c = tiny_run();
  c.split.val_point = 2007;
  auto back = config::parse_config(config::to_json_text(c));
  EXPECT_EQ(config::to_json_text(back), config::to_json_text(c));
  config::apply_override(back, "train.learning_rate", "0.5");
  EXPECT_EQ(back.train.learning_rate, 0.5);
  config::apply_override(back, "model.gate", "scalar");
  EXPECT_EQ(back.model.gate, "scalar");
  config::apply_override(back, "sampling.limits", "[7,3]");
  EXPECT_EQ(back.sampling.limits, (std::vector<int>{7, 3}));
  config::apply_override(back, "split.train_point", "2004");
  EXPECT_EQ(back.split.train(), 2004);
  EXPECT_THROW(config::apply_override(back, "train.nope", "1"), config::ConfigError);
  EXPECT_THROW(config::apply_override(back, "model.lambda", "2"), config::ConfigError);
  EXPECT_THROW(config::parse_config(R"({"train": {"epochz": 3}})"), config::ConfigError);
  EXPECT_THROW(config::parse_config(R"({"sampling": {"hops": 3}})"), config::ConfigError);
  EXPECT_THROW(config::parse_config("{"), config::ConfigError);
  const auto defaults = config::RunConfig{};
  EXPECT_EQ(defaults.model.layers, 4);
  EXPECT_EQ(defaults.model.bins, 5);
  EXPECT_EQ(defaults.train.learning_rate, 1e-4);
  EXPECT_EQ(defaults.window, 5);
  EXPECT_EQ(defaults.split.delta, 5);
}

TEST(Dataset, BinsFittedOnTrainOnly) {
  auto p = prepare(tiny_run());
  ASSERT_EQ(p.data.train.size(), 12u);
  for (const auto& s : p.data.train) {
    EXPECT_GE(s.bin, 0);
    EXPECT_EQ(s.conformity_value, static_cast<double>(p.ws.net->citations_at(s.spec.target, 2010)));
  }
  for (const auto& s : p.data.val) EXPECT_EQ(s.bin, p.data.edges.assign(s.conformity_value));
  for (const auto& s : p.data.test) EXPECT_EQ(s.bin, -1);
}

TEST(Trainer, PatienceZeroRunsOneEpoch) {
  auto c = tiny_run();
  c.train.patience = 0;
  c.train.epochs = 5;
  auto p = prepare(c);
  pipeline::Model m(c);
  auto r = pipeline::train(m, p.data, p.ws);
  EXPECT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.best_epoch, 1);
}

TEST(Trainer, SameSeedSameTrace) {
  auto p = prepare(tiny_run());
  pipeline::Model a(p.config), b(p.config);
  auto ra = pipeline::train(a, p.data, p.ws);
  auto rb = pipeline::train(b, p.data, p.ws);
  ASSERT_EQ(ra.history.size(), rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    EXPECT_EQ(ra.history[i].loss, rb.history[i].loss);
    EXPECT_EQ(ra.history[i].val_male, rb.history[i].val_male);
  }
  EXPECT_EQ(a.params().all(), b.params().all());
  EXPECT_EQ(pipeline::report_json(pipeline::evaluate(a, p.data.test, p.ws)),
            pipeline::report_json(pipeline::evaluate(b, p.data.test, p.ws)));
}

TEST(Trainer, KeepsBestValidationEpoch) {
  auto p = prepare(tiny_run());
  pipeline::Model m(p.config);
  auto r = pipeline::train(m, p.data, p.ws);
  double best = 1e300;
  int best_epoch = 0;
  for (const auto& e : r.history) {
    if (*e.val_male < best) {
      best = *e.val_male;
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  std::vector<double> y, yhat;
  for (const auto& row : pipeline::predict_samples(m, p.data.val, p.ws)) {
    y.push_back(row.label);
    yhat.push_back(row.total);
  }
  EXPECT_NEAR(metrics::male(y, yhat), best, 1e-12);
}

TEST(Trainer, NonFiniteLossAbortsWithDump) {
  auto c = tiny_run();
  auto p = prepare(c);
  pipeline::Model m(c);
  m.params().at("pdm.pred.ctr.1.bias")(0, 0) = std::numeric_limits<double>::quiet_NaN();
  auto dir = scratch("nonfinite");
  pipeline::TrainOptions opts;
  opts.dump_dir = dir;
  EXPECT_THROW(pipeline::train(m, p.data, p.ws, opts), pipeline::TrainingError);
  EXPECT_TRUE(fs::exists(dir / "nonfinite_dump.json"));
}

TEST(Checkpoint, RoundTripPredictsIdentically) {
  auto p = prepare(tiny_run());
  pipeline::Model m(p.config);
  pipeline::train(m, p.data, p.ws);
  auto dir = scratch("ckpt");
  pipeline::save_checkpoint(dir / "c.json", m, p.data.edges);
  auto ck = pipeline::read_checkpoint(dir / "c.json");
  EXPECT_EQ(config::to_json_text(ck.config), config::to_json_text(p.config));
  EXPECT_EQ(ck.edges.upper, p.data.edges.upper);
  pipeline::Model back(ck.config, ck.params);
  for (const auto& s : p.data.test) {
    const auto a = m.predict(s.inputs), b = back.predict(s.inputs);
    EXPECT_EQ(a.total, b.total);
    EXPECT_EQ(a.dif, b.dif);
  }
  auto bad = ck.params;
  bad.all().begin()->second.resize(1, 1);
  EXPECT_THROW(pipeline::Model(ck.config, bad), std::exception);
}

TEST(Evaluate, RescoringExportedPredictions) {
  auto p = prepare(tiny_run());
  pipeline::Model m(p.config);
  pipeline::train(m, p.data, p.ws);
  auto report = pipeline::evaluate(m, p.data.test, p.ws);
  auto dir = scratch("eval");
  pipeline::write_report(report, dir / "report.json");
  ASSERT_TRUE(fs::exists(dir / "breakdowns.csv"));
  auto rows = composition::read_breakdowns(dir / "breakdowns.csv");
  std::size_t n_sum = 0;
  for (const auto& cat : report.rows) {
    std::vector<double> y, yhat;
    for (const auto& r : rows) {
      if (cat.name == "total" || cat.name == splits::category_name(r.category)) {
        y.push_back(r.label);
        yhat.push_back(r.total);
        EXPECT_EQ(r.total, (r.dif + r.con) + r.contribution);
      }
    }
    EXPECT_EQ(cat.n, y.size());
    if (cat.name != "total") n_sum += cat.n;
    if (y.empty()) {
      EXPECT_FALSE(cat.male.has_value());
      EXPECT_FALSE(cat.note.empty());
      continue;
    }
    EXPECT_NEAR(*cat.male, metrics::male(y, yhat), 1e-12);
    if (cat.log_r2) EXPECT_NEAR(*cat.log_r2, metrics::log_r2(y, yhat), 1e-12);
  }
  EXPECT_EQ(n_sum, report.row("total").n);
}

TEST(Evaluate, AllFreshLeavesPreviousEmpty) {
  std::vector<composition::BreakdownRow> rows{row(0.1, 0.2, 0.3, splits::Category::kFresh, 2004, 0.4),
                                              row(0.2, 0.2, 0.3, splits::Category::kFresh, 2005, 1.1)};
  auto r = pipeline::score(rows);
  EXPECT_EQ(r.row("previous").n, 0u);
  EXPECT_FALSE(r.row("previous").male.has_value());
  EXPECT_FALSE(r.row("previous").note.empty());
  EXPECT_EQ(r.row("fresh").n, 2u);
  EXPECT_EQ(*r.row("fresh").male, *r.row("total").male);
}
