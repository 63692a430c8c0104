#include "dppdcc/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "dppdcc/metrics.hpp"
#include "json.hpp"

namespace dppdcc::pipeline {

using nlohmann::json;

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return mix(a ^ mix(b)); }

}  // namespace

Model::Model(config::RunConfig c)
    : config_(std::move(c)),
      rng_(config_.train.seed),
      encoder_(config_.encoder_config(), store_, rng_),
      heads_(config_.head_config(), store_, rng_) {}

Model::Model(config::RunConfig c, const nn::ParameterStore& params) : Model(std::move(c)) {
  for (auto& [name, value] : store_.all()) {
    if (!params.contains(name)) throw TrainingError("checkpoint is missing parameter " + name);
    const auto& loaded = params.at(name);
    if (loaded.rows() != value.rows() || loaded.cols() != value.cols()) {
      throw TrainingError("checkpoint parameter " + name + " has the wrong shape");
    }
    value = loaded;
  }
  if (params.all().size() != store_.all().size()) throw TrainingError("checkpoint has unexpected parameters");
}

Model::Forward Model::forward(nn::Binder& b, const encoder::GraphInputs& inputs) const {
  Forward f;
  f.o = encoder_.encode(b, inputs);
  f.out = heads_.forward(b, f.o);
  return f;
}

disentangle::PredictionBreakdown Model::predict(const encoder::GraphInputs& inputs) const {
  ad::Tape tape;
  nn::Binder b(tape, store_);
  return forward(b, inputs).out.breakdown().front();
}

disentangle::LossComponents sample_loss(nn::Binder& b, const Model& m, const Sample& s, const Workspace& ws,
                                        std::uint64_t augment_seed) {
  const auto& hc = m.heads().config();
  auto f = m.forward(b, s.inputs);
  const std::array<double, 1> label{s.spec.label};
  if (!hc.auxiliary()) return disentangle::total_loss(f.out, label, nullptr, hc);
  if (s.bin < 0) throw TrainingError("training sample has no conformity bin");

  auto view = [&](disentangle::AugmentMode mode, std::uint64_t salt) {
    disentangle::AugmentationSpec spec{mode, m.config().train.drop_fraction, mix(augment_seed, salt)};
    auto g = disentangle::augment_views(s.graph, *ws.net, spec);
    ad::Var o = m.encoder().encode(b, encoder::prepare_inputs(g, *ws.table, *ws.net));
    return m.heads().project(b, nn::mlp(b, m.heads().encoder_spec(0), o));
  };
  disentangle::AuxiliaryInputs aux;
  aux.z_ori = m.heads().project(b, f.out.dif);
  aux.z_pos = view(disentangle::AugmentMode::kPositive, 1);
  aux.z_neg = view(disentangle::AugmentMode::kNegative, 2);
  aux.con_logits = m.heads().classify(b, f.out.con);
  aux.bins = {s.bin};
  return disentangle::total_loss(f.out, label, &aux, hc);
}

std::vector<composition::BreakdownRow> predict_samples(const Model& m, std::span<const Sample> samples,
                                                       const Workspace& ws) {
  std::vector<composition::BreakdownRow> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) {
    const auto p = m.predict(s.inputs);
    composition::BreakdownRow r;
    r.paper_id = ws.net->paper(s.spec.target).paper_id;
    r.pub_time = ws.net->pub_time(s.spec.target);
    r.category = s.spec.category;
    r.dif = p.dif;
    r.con = p.con;
    r.contribution = p.contribution;
    r.total = p.total;
    r.label = s.spec.label;
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

double male_of(const std::vector<composition::BreakdownRow>& rows) {
  std::vector<double> y, p;
  for (const auto& r : rows) {
    y.push_back(r.label);
    p.push_back(r.total);
  }
  return metrics::male(y, p);
}

void dump_nonfinite(const TrainOptions& options, int epoch, std::size_t batch, const Sample& s, const Workspace& ws,
                    const disentangle::LossComponents& c, const Model& m) {
  json j;
  j["epoch"] = epoch;
  j["batch"] = batch;
  j["paper_id"] = ws.net->paper(s.spec.target).paper_id;
  j["observation_point"] = s.spec.observation_point;
  j["label"] = s.spec.label;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(std::to_string(v)); };
  j["loss"] = {{"total", num(c.total.scalar())}, {"reg", num(c.reg.scalar())}, {"dif", num(c.dif.scalar())},
               {"con", num(c.con.scalar())},     {"ort", num(c.ort.scalar())}};
  json norms = json::object();
  for (const auto& [name, p] : m.params().all()) norms[name] = num(p.norm());
  j["parameter_norms"] = std::move(norms);
  std::filesystem::create_directories(options.dump_dir);
  std::ofstream out(options.dump_dir / "nonfinite_dump.json", std::ios::binary);
  out << j.dump(2) << '\n';
}

}  // namespace

TrainResult train(Model& m, const Dataset& d, const Workspace& ws, const TrainOptions& options) {
  const auto& tc = m.config().train;
  if (d.train.empty()) throw TrainingError("no training samples");
  nn::Adam adam({tc.learning_rate, 0.9, 0.999, 1e-8, tc.weight_decay, tc.clip_norm});
  TrainResult result;
  nn::ParameterStore best = m.params();
  double best_score = std::numeric_limits<double>::infinity();
  int since_best = 0;

  std::vector<std::size_t> order(d.train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    nn::Rng shuffle_rng(mix(tc.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += tc.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      nn::Gradients grads;
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = d.train[order[k]];
        ad::Tape tape;
        nn::Binder b(tape, m.params());
        auto c = sample_loss(b, m, s, ws, mix(mix(tc.seed, static_cast<std::uint64_t>(epoch)), order[k]));
        if (!std::isfinite(c.total.scalar())) {
          dump_nonfinite(options, epoch, batch, s, ws, c, m);
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch) + "; see " + (options.dump_dir / "nonfinite_dump.json").string());
        }
        tape.backward(c.total);
        nn::accumulate(grads, b.gradients(), weight);
        rec.loss += c.total.scalar();
        rec.reg += c.reg.scalar();
        rec.dif += c.dif.scalar();
        rec.con += c.con.scalar();
        rec.ort += c.ort.scalar();
      }
      adam.step(m.params(), grads);
    }
    const double n = static_cast<double>(d.train.size());
    rec.loss /= n;
    rec.reg /= n;
    rec.dif /= n;
    rec.con /= n;
    rec.ort /= n;

    if (tc.track_train_metric || d.val.empty() || options.stop_below_train_male) {
      rec.train_male = male_of(predict_samples(m, d.train, ws));
    }
    if (!d.val.empty()) rec.val_male = male_of(predict_samples(m, d.val, ws));
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (rec.train_male) {
      result.min_train_male = std::min(result.min_train_male.value_or(*rec.train_male), *rec.train_male);
    }
    const double score = rec.val_male ? *rec.val_male : *rec.train_male;
    if (score < best_score) {
      best_score = score;
      best = m.params();
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (options.log) {
      *options.log << "epoch " << epoch << " loss " << rec.loss << " reg " << rec.reg << " dif " << rec.dif << " con "
                   << rec.con << " ort " << rec.ort;
      if (rec.train_male) *options.log << " train_male " << *rec.train_male;
      if (rec.val_male) *options.log << " val_male " << *rec.val_male;
      *options.log << " (" << rec.seconds << "s)\n";
      options.log->flush();
    }
    result.history.push_back(rec);
    if (since_best >= tc.patience) break;
    if (options.stop_below_train_male && *rec.train_male < *options.stop_below_train_male) break;
  }
  result.best_val_male = best_score;
  m.params() = std::move(best);
  return result;
}

void write_history(const std::filesystem::path& file, const std::vector<EpochRecord>& history) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw TrainingError("cannot write " + file.string());
  out.precision(10);
  out << "epoch,loss,reg,dif,con,ort,train_male,val_male,seconds\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.loss << ',' << r.reg << ',' << r.dif << ',' << r.con << ',' << r.ort << ',';
    if (r.train_male) out << *r.train_male;
    out << ',';
    if (r.val_male) out << *r.val_male;
    out << ',' << r.seconds << '\n';
  }
}

void save_checkpoint(const std::filesystem::path& file, const Model& m, const disentangle::BinEdges& edges) {
  json j;
  j["format"] = "dppdcc-checkpoint";
  j["version"] = 1;
  j["config"] = json::parse(config::to_json_text(m.config(), -1));
  j["bin_edges"] = {{"upper", edges.upper}, {"degenerate", edges.degenerate}};
  json params = json::object();
  for (const auto& [name, p] : m.params().all()) {
    params[name] = {{"rows", p.rows()},
                    {"cols", p.cols()},
                    {"data", std::vector<double>(p.data(), p.data() + p.size())}};
  }
  j["params"] = std::move(params);
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw TrainingError("cannot write " + file.string());
  out << j.dump() << '\n';
}

Checkpoint read_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw TrainingError("cannot read " + file.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "dppdcc-checkpoint") {
    throw TrainingError(file.string() + " is not a checkpoint");
  }
  if (j.value("version", 0) != 1) throw TrainingError("unsupported checkpoint version");
  Checkpoint c;
  c.config = config::parse_config(j.at("config").dump());
  c.edges.upper = j.at("bin_edges").at("upper").get<std::vector<double>>();
  c.edges.degenerate = j.at("bin_edges").at("degenerate").get<bool>();
  for (const auto& [name, p] : j.at("params").items()) {
    const auto rows = p.at("rows").get<ad::Index>(), cols = p.at("cols").get<ad::Index>();
    auto data = p.at("data").get<std::vector<double>>();
    if (static_cast<ad::Index>(data.size()) != rows * cols) throw TrainingError("checkpoint parameter " + name);
    c.params.add(name, Eigen::Map<ad::Matrix>(data.data(), rows, cols));
  }
  return c;
}

const CategoryMetrics& EvalReport::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw std::out_of_range("no report row " + name);
}

EvalReport score(std::vector<composition::BreakdownRow> rows, int value_bins) {
  EvalReport r;
  auto metrics_for = [&](const std::string& name, auto&& keep) {
    CategoryMetrics m;
    m.name = name;
    std::vector<double> y, p;
    for (const auto& b : rows) {
      if (keep(b)) {
        y.push_back(b.label);
        p.push_back(b.total);
      }
    }
    m.n = y.size();
    if (m.n == 0) {
      m.note = "no samples in this category";
    } else {
      m.male = metrics::male(y, p);
      try {
        m.log_r2 = metrics::log_r2(y, p);
      } catch (const metrics::MetricError& e) {
        m.note = e.what();
      }
    }
    r.rows.push_back(std::move(m));
  };
  metrics_for("total", [](const auto&) { return true; });
  for (auto c : {splits::Category::kPrevious, splits::Category::kFresh, splits::Category::kImmediate}) {
    metrics_for(splits::category_name(c), [c](const auto& b) { return b.category == c; });
  }
  r.composition = composition::report_composition(rows, value_bins);
  r.breakdowns = std::move(rows);
  return r;
}

EvalReport evaluate(const Model& m, std::span<const Sample> samples, const Workspace& ws, int value_bins) {
  return score(predict_samples(m, samples, ws), value_bins);
}

std::string report_json(const EvalReport& r) {
  json rows = json::array();
  for (const auto& m : r.rows) {
    json row = {{"category", m.name}, {"n", m.n}};
    row["MALE"] = m.male ? json(*m.male) : json(nullptr);
    row["LogR2"] = m.log_r2 ? json(*m.log_r2) : json(nullptr);
    if (!m.note.empty()) row["note"] = m.note;
    rows.push_back(std::move(row));
  }
  auto groups = [](const std::vector<composition::CompositionGroup>& gs) {
    json out = json::array();
    for (const auto& g : gs) {
      json e = {{"group", g.key},
                {"n", g.n},
                {"mean", {{"dif", g.mean[0]}, {"con", g.mean[1]}, {"contribution", g.mean[2]}}},
                {"std", {{"dif", g.stddev[0]}, {"con", g.stddev[1]}, {"contribution", g.stddev[2]}}}};
      if (g.lower) e["lower"] = *g.lower;
      if (g.upper) e["upper"] = *g.upper;
      out.push_back(std::move(e));
    }
    return out;
  };
  const auto& c = r.composition;
  json j = {{"metrics", std::move(rows)},
            {"composition",
             {{"positive", c.positive},
              {"other", c.other},
              {"negative",
               {{"n", c.negative.negative},
                {"min_is_contribution", c.negative.min_is_contribution},
                {"share", c.negative.share}}},
              {"by_time", groups(c.by_time)},
              {"by_category", groups(c.by_category)},
              {"by_value", groups(c.by_value)}}}};
  return j.dump(2);
}

void write_report(const EvalReport& r, const std::filesystem::path& file) {
  const auto dir = file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");
  std::filesystem::create_directories(dir);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw TrainingError("cannot write " + file.string());
  out << report_json(r) << '\n';
  composition::write_breakdowns(dir / "breakdowns.csv", r.breakdowns);
  composition::write_tables(r.composition, dir);
}

}  // namespace dppdcc::pipeline
