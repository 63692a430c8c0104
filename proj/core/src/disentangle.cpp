#include "dppdcc/disentangle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dppdcc::disentangle {

namespace {

const char* const kViews[3] = {"dif", "con", "ctr"};

}  // namespace

void HeadConfig::validate() const {
  if (hidden_dim < 1) throw std::invalid_argument("head config: hidden_dim must be >= 1");
  if (bins < 2) throw std::invalid_argument("head config: bins must be >= 2");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("head config: alpha must be >= 0");
  if (!(tau > 0.0)) throw std::invalid_argument("head config: tau must be > 0");
}

std::vector<PredictionBreakdown> PerspectiveOutput::breakdown() const {
  const auto& d = dif_value.value();
  const auto& c = con_value.value();
  const auto& r = ctr_value.value();
  const auto& t = total.value();
  std::vector<PredictionBreakdown> out(static_cast<std::size_t>(t.rows()));
  for (ad::Index i = 0; i < t.rows(); ++i) out[static_cast<std::size_t>(i)] = {d(i, 0), c(i, 0), r(i, 0), t(i, 0)};
  return out;
}

PerspectiveHeads::PerspectiveHeads(HeadConfig config, ParameterStore& store, nn::Rng& rng)
    : config_(std::move(config)) {
  config_.validate();
  const int h = config_.hidden_dim;
  if (config_.single_head) {
    pred_.push_back(nn::register_mlp(store, "pdm.pred.total", h, h, 1, rng));
    return;
  }
  for (const char* v : kViews) {
    enc_.push_back(nn::register_mlp(store, std::string("pdm.enc.") + v, h, h, h, rng));
    pred_.push_back(nn::register_mlp(store, std::string("pdm.pred.") + v, h, h, 1, rng));
  }
  projection_ = nn::register_mlp(store, "pdm.projection", h, h, h, rng);
  classifier_ = nn::register_mlp(store, "pdm.classifier", h, h, config_.bins, rng);
}

PerspectiveOutput PerspectiveHeads::forward(Binder& b, const Var& o) const {
  PerspectiveOutput out;
  if (config_.single_head) {
    out.ctr = o;
    out.ctr_value = nn::mlp(b, pred_.front(), o);
    Var zero = b.tape().constant(ad::Matrix::Zero(o.rows(), 1));
    out.dif_value = zero;
    out.con_value = zero;
  } else {
    out.dif = nn::mlp(b, enc_[0], o);
    out.con = nn::mlp(b, enc_[1], o);
    out.ctr = nn::mlp(b, enc_[2], o);
    out.dif_value = nn::mlp(b, pred_[0], out.dif);
    out.con_value = nn::mlp(b, pred_[1], out.con);
    out.ctr_value = nn::mlp(b, pred_[2], out.ctr);
  }
  out.total = ad::add(ad::add(out.dif_value, out.con_value), out.ctr_value);
  return out;
}

Var PerspectiveHeads::project(Binder& b, const Var& dif) const {
  if (config_.single_head) throw std::logic_error("single-head model has no contrastive projection");
  return ad::l2_normalize_rows(nn::mlp(b, projection_, dif));
}

Var PerspectiveHeads::classify(Binder& b, const Var& con) const {
  if (config_.single_head) throw std::logic_error("single-head model has no conformity classifier");
  return nn::mlp(b, classifier_, con);
}

Var diffusion_loss(const Var& z_ori, const Var& z_pos, const Var& z_neg, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("diffusion_loss: tau must be > 0");
  const std::array<Var, 2> sims{ad::scale(ad::row_dot(z_ori, z_pos), 1.0 / tau),
                                ad::scale(ad::row_dot(z_ori, z_neg), 1.0 / tau)};
  Var log_p = ad::slice_cols(ad::log_softmax_rows(ad::concat_cols(sims)), 0, 1);
  return ad::scale(ad::mean_all(log_p), -1.0);
}

Var conformity_loss(const Var& logits, std::span<const int> labels) {
  const ad::Index n = logits.rows(), m = logits.cols();
  if (static_cast<ad::Index>(labels.size()) != n) throw std::invalid_argument("conformity_loss: one label per row");
  if (n == 0) throw std::invalid_argument("conformity_loss: empty batch");
  ad::Matrix onehot = ad::Matrix::Zero(n, m);
  for (ad::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= m) {
      throw std::out_of_range("conformity_loss: label " + std::to_string(y) + " outside [0, " + std::to_string(m) + ")");
    }
    onehot(i, y) = 1.0;
  }
  Var picked = ad::mul(ad::log_softmax_rows(logits), logits.tape()->constant(std::move(onehot)));
  return ad::scale(ad::sum_all(picked), -1.0 / static_cast<double>(n));
}

namespace {

bool zero_row(const ad::Matrix& m, ad::Index r) { return m.row(r).squaredNorm() == 0.0; }

Var elementwise_measure(const Var& a, const Var& b) {
  Var prod = ad::mul(a, b);
  Var num = ad::row_dot(prod, prod);
  Var norms = ad::mul(ad::row_dot(a, a), ad::row_dot(b, b));
  Var inv_sqrt = ad::exp(ad::scale(ad::log(ad::add_scalar(norms, 1e-300)), -0.5));
  return ad::mul(num, inv_sqrt);
}

}  // namespace

Var orthogonal_loss(const Var& a, const Var& b, const Var& c, OrthogonalMode mode) {
  const ad::Index n = a.rows();
  if (n == 0) throw std::invalid_argument("orthogonal_loss: empty batch");
  const std::array<std::pair<const Var*, const Var*>, 3> pairs{{{&a, &b}, {&a, &c}, {&b, &c}}};
  // Per-row weight 1 / (number of pairs without a zero vector).
  ad::Matrix weight(n, 1);
  for (ad::Index r = 0; r < n; ++r) {
    int valid = 0;
    for (const auto& [x, y] : pairs) valid += !(zero_row(x->value(), r) || zero_row(y->value(), r));
    weight(r, 0) = valid > 0 ? 1.0 / valid : 0.0;
  }
  Var sum;
  for (const auto& [x, y] : pairs) {
    Var term = mode == OrthogonalMode::kSquaredCosine ? ad::squared_cosine_rows(*x, *y) : elementwise_measure(*x, *y);
    sum = sum.valid() ? ad::add(sum, term) : term;
  }
  return ad::mean_all(ad::mul(sum, a.tape()->constant(std::move(weight))));
}

LossComponents total_loss(const PerspectiveOutput& out, std::span<const double> labels, const AuxiliaryInputs* aux,
                          const HeadConfig& config) {
  const ad::Index n = out.total.rows();
  if (static_cast<ad::Index>(labels.size()) != n) throw std::invalid_argument("total_loss: one label per sample");
  ad::Tape& tape = *out.total.tape();
  ad::Matrix y(n, 1);
  for (ad::Index i = 0; i < n; ++i) y(i, 0) = labels[static_cast<std::size_t>(i)];
  LossComponents c;
  c.reg = ad::mean_all(ad::square(ad::sub(out.total, tape.constant(std::move(y)))));
  if (aux == nullptr || !config.auxiliary()) {
    c.dif = tape.scalar(0.0);
    c.con = tape.scalar(0.0);
    c.ort = tape.scalar(0.0);
    c.total = c.reg;
    return c;
  }
  c.dif = diffusion_loss(aux->z_ori, aux->z_pos, aux->z_neg, config.tau);
  c.con = conformity_loss(aux->con_logits, aux->bins);
  c.ort = orthogonal_loss(out.dif, out.con, out.ctr, config.orthogonal);
  Var dis = ad::add(ad::add(c.dif, c.con), c.ort);
  c.total = ad::add(c.reg, ad::scale(dis, config.alpha));
  return c;
}

int BinEdges::assign(double value) const {
  if (upper.empty()) throw std::logic_error("BinEdges::assign: no bins fitted");
  auto it = std::lower_bound(upper.begin(), upper.end(), value);
  if (it == upper.end()) return static_cast<int>(upper.size()) - 1;
  return static_cast<int>(it - upper.begin());
}

BinResult bin_labels(std::span<const double> training_values, int bins) {
  if (bins < 2) throw std::invalid_argument("bin_labels: need at least 2 bins");
  const std::size_t n = training_values.size();
  if (n == 0) throw std::invalid_argument("bin_labels: no training values");
  for (double v : training_values) {
    if (!std::isfinite(v)) throw std::invalid_argument("bin_labels: non-finite value");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return training_values[a] < training_values[b]; });

  std::vector<double> distinct;
  for (std::size_t i : order) {
    if (distinct.empty() || distinct.back() != training_values[i]) distinct.push_back(training_values[i]);
  }

  BinResult r;
  r.bins.assign(n, 0);
  if (distinct.size() < static_cast<std::size_t>(bins)) {
    r.edges.upper = distinct;
    r.edges.degenerate = true;
    r.warnings.push_back("only " + std::to_string(distinct.size()) + " distinct values for " + std::to_string(bins) +
                         " bins; using one bin per distinct value");
    for (std::size_t i = 0; i < n; ++i) r.bins[i] = r.edges.assign(training_values[i]);
    return r;
  }
  r.edges.upper.assign(static_cast<std::size_t>(bins), 0.0);
  for (std::size_t rank = 0; rank < n; ++rank) {
    const int bin = static_cast<int>(rank * static_cast<std::size_t>(bins) / n);
    r.bins[order[rank]] = bin;
    r.edges.upper[static_cast<std::size_t>(bin)] = training_values[order[rank]];
  }
  return r;
}

void AugmentationSpec::validate() const {
  if (!(drop_fraction >= 0.0 && drop_fraction < 0.95)) {
    throw std::invalid_argument("augmentation drop fraction must lie in [0, 0.95)");
  }
}

std::vector<double> citation_weights(const corpus::GlobalCitationNetwork& net, const graph::HeteroSnapshot& s) {
  std::vector<double> w(s.papers.size(), 0.0);
  double mx = 0.0;
  for (std::size_t i = 0; i < s.papers.size(); ++i) {
    w[i] = static_cast<double>(net.citations_at(s.papers[i], s.time_step));
    mx = std::max(mx, w[i]);
  }
  for (double& v : w) v = mx > 0.0 ? v / mx : 0.0;
  return w;
}

graph::HeteroSnapshot augment_snapshot(const corpus::GlobalCitationNetwork& net, const graph::HeteroSnapshot& s,
                                       AugmentMode mode, double drop_fraction, nn::Rng& rng) {
  if (s.placeholder || s.papers.empty() || drop_fraction <= 0.0) return s;
  using graph::Relation;
  constexpr double kFloor = 1e-6;

  const std::vector<double> w = citation_weights(net, s);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < s.papers.size(); ++i) {
    if (s.papers[i] != s.target) candidates.push_back(i);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double expected = drop_fraction * static_cast<double>(candidates.size());
  std::size_t drop = static_cast<std::size_t>(std::floor(expected));
  if (unit(rng) < expected - std::floor(expected)) ++drop;
  drop = std::min(drop, candidates.size());

  // Weighted sampling without replacement: keep the `drop` largest log(u)/w.
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(candidates.size());
  for (std::size_t i : candidates) {
    const double sel = (mode == AugmentMode::kPositive ? 1.0 - w[i] : w[i]) + kFloor;
    double u = unit(rng);
    while (u <= 0.0) u = unit(rng);
    keys.emplace_back(std::log(u) / sel, i);
  }
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(drop), keys.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  std::vector<bool> keep_paper(s.papers.size(), true);
  for (std::size_t k = 0; k < drop; ++k) keep_paper[keys[k].second] = false;

  graph::HeteroSnapshot out;
  out.time_step = s.time_step;
  out.target = s.target;
  out.placeholder = false;
  std::vector<std::int32_t> paper_map(s.papers.size(), -1);
  for (std::size_t i = 0; i < s.papers.size(); ++i) {
    if (!keep_paper[i]) continue;
    paper_map[i] = static_cast<std::int32_t>(out.papers.size());
    out.papers.push_back(s.papers[i]);
    out.roles.push_back(s.roles[i]);
    out.hops.push_back(s.hops[i]);
  }

  auto filter_papers = [&](Relation r, const std::vector<double>& raw, std::vector<double>& raw_out,
                           std::vector<double>& norm_out) {
    const auto& e = s.relation(r);
    auto& o = out.relation(r);
    for (std::size_t k = 0; k < e.size(); ++k) {
      const auto a = paper_map[e.src[k]], b = paper_map[e.dst[k]];
      if (a < 0 || b < 0) continue;
      o.src.push_back(a);
      o.dst.push_back(b);
      raw_out.push_back(raw[k]);
    }
    norm_out = graph::normalize_per_destination(raw_out, o.dst);
  };
  filter_papers(Relation::kCites, s.cites_raw, out.cites_raw, out.cites_strength);
  filter_papers(Relation::kCitedBy, s.cited_by_raw, out.cited_by_raw, out.cited_by_strength);

  // Metadata relations come in (meta -> paper, paper -> meta) pairs.
  auto filter_meta = [&](Relation to_paper, Relation from_paper, std::size_t count, std::vector<bool> keep) {
    const auto& ein = s.relation(to_paper);
    for (std::size_t k = 0; k < ein.size(); ++k) {
      if (paper_map[ein.dst[k]] >= 0) keep[ein.src[k]] = true;
    }
    const auto& eout = s.relation(from_paper);
    for (std::size_t k = 0; k < eout.size(); ++k) {
      if (paper_map[eout.src[k]] >= 0) keep[eout.dst[k]] = true;
    }
    std::vector<std::int32_t> map(count, -1);
    std::int32_t next = 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (keep[i]) map[i] = next++;
    }
    auto& oin = out.relation(to_paper);
    for (std::size_t k = 0; k < ein.size(); ++k) {
      const auto p = paper_map[ein.dst[k]];
      if (p < 0) continue;
      oin.src.push_back(map[ein.src[k]]);
      oin.dst.push_back(p);
    }
    auto& oout = out.relation(from_paper);
    for (std::size_t k = 0; k < eout.size(); ++k) {
      const auto p = paper_map[eout.src[k]];
      if (p < 0) continue;
      oout.src.push_back(p);
      oout.dst.push_back(map[eout.dst[k]]);
    }
    return keep;
  };
  auto keep_a = filter_meta(Relation::kWrites, Relation::kWrittenBy, s.authors.size(),
                            std::vector<bool>(s.authors.size(), false));
  for (std::size_t i = 0; i < s.authors.size(); ++i) {
    if (keep_a[i]) out.authors.push_back(s.authors[i]);
  }
  auto keep_v = filter_meta(Relation::kPublishes, Relation::kPublishedIn, s.venues.size(),
                            std::vector<bool>(s.venues.size(), false));
  for (std::size_t i = 0; i < s.venues.size(); ++i) {
    if (keep_v[i]) out.venues.push_back(s.venues[i]);
  }
  std::vector<bool> time_seed(s.times.size(), false);
  time_seed[static_cast<std::size_t>(s.time_node())] = true;
  auto keep_t = filter_meta(Relation::kHave, Relation::kHadBy, s.times.size(), std::move(time_seed));
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    if (keep_t[i]) out.times.push_back(s.times[i]);
  }
  return out;
}

graph::DynamicHeteroGraph augment_views(const graph::DynamicHeteroGraph& g, const corpus::GlobalCitationNetwork& net,
                                        const AugmentationSpec& spec) {
  spec.validate();
  graph::DynamicHeteroGraph out;
  out.target = g.target;
  out.observation_point = g.observation_point;
  out.snapshots.reserve(g.snapshots.size());
  for (std::size_t k = 0; k < g.snapshots.size(); ++k) {
    nn::Rng rng(spec.seed + 0x9E3779B97F4A7C15ULL * (k + 1));
    out.snapshots.push_back(augment_snapshot(net, g.snapshots[k], spec.mode, spec.drop_fraction, rng));
  }
  return out;
}

}  // namespace dppdcc::disentangle
