#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dppdcc::fixtures {

corpus::PaperRecord paper(const std::string& id, corpus::TimeStep year, std::vector<std::string> refs,
                          std::vector<std::string> authors, std::string venue) {
  corpus::PaperRecord r;
  r.paper_id = id;
  r.title = "title of " + id;
  r.abstract = "abstract words for " + id;
  r.author_ids = authors.empty() ? std::vector<std::string>{"A_" + id} : std::move(authors);
  if (!venue.empty()) r.venue_id = std::move(venue);
  r.pub_time = year;
  r.references = std::move(refs);
  return r;
}

corpus::GlobalCitationNetwork network(std::vector<corpus::PaperRecord> records) {
  return corpus::ingest_corpus(std::move(records));
}

std::vector<corpus::PaperRecord> tiny_corpus() {
  return {
      paper("p00", 2000, {}, {"a1"}, "V0"),
      paper("p01", 2000, {}, {"a2"}, "V1"),
      paper("p02", 2001, {"p00"}, {"a1", "a3"}, "V0"),
      paper("p03", 2001, {"p00", "p01"}, {"a2"}, "V1"),
      paper("p04", 2002, {"p02", "p00"}, {"a3"}, "V0"),
      paper("p05", 2003, {"p03", "p04"}, {"a1"}, "V1"),
      paper("p06", 2003, {"p00", "p02"}, {"a4"}, "V0"),
      paper("p07", 2004, {"p05", "p06", "p00"}, {"a2", "a4"}, "V1"),
      paper("p08", 2005, {"p07", "p04"}, {"a3"}, "V0"),
      paper("p09", 2005, {"p05"}, {"a1"}, "V1"),
      paper("p10", 2006, {"p07", "p08", "p05"}, {"a4"}, "V0"),
      paper("p11", 2006, {"p09"}, {"a2"}, "V1"),
  };
}

GradCheckResult check_gradients(nn::ParameterStore& store, const std::function<ad::Var(nn::Binder&)>& loss,
                                double step, double floor) {
  nn::Gradients analytic;
  {
    ad::Tape tape;
    nn::Binder b(tape, store);
    auto l = loss(b);
    tape.backward(l);
    analytic = b.gradients();
  }
  auto eval = [&] {
    ad::Tape tape;
    nn::Binder b(tape, store);
    return loss(b).scalar();
  };
  GradCheckResult out;
  for (auto& [name, value] : store.all()) {
    auto it = analytic.find(name);
    for (ad::Index i = 0; i < value.size(); ++i) {
      double& x = value.data()[i];
      const double saved = x;
      x = saved + step;
      const double up = eval();
      x = saved - step;
      const double down = eval();
      x = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = it == analytic.end() ? 0.0 : it->second.data()[i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++out.checked;
      if (err > out.max_relative_error) {
        out.max_relative_error = err;
        out.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return out;
}

namespace {

double leaky(double x, double slope) { return x > 0 ? x : slope * x; }

ad::Matrix layer_norm(const ad::Matrix& x, const ad::Matrix& gain, const ad::Matrix& bias) {
  ad::Matrix out(x.rows(), x.cols());
  for (ad::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    for (ad::Index c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mu) / std::sqrt(var + 1e-5) * gain(0, c) + bias(0, c);
  }
  return out;
}

}  // namespace

ad::Matrix gatv2_attention(const nn::ParameterStore& store, const encoder::CompGatSpec& spec, const ad::Matrix& states,
                           const graph::EdgeList& edges, int heads, double slope) {
  const ad::Matrix xl = states * store.at(spec.left), xr = states * store.at(spec.right);
  const ad::Matrix& a = store.at(spec.attention);
  const ad::Index width = xl.cols() / heads;
  const auto e_count = static_cast<ad::Index>(edges.size());
  ad::Matrix logit = ad::Matrix::Zero(e_count, heads);
  for (ad::Index e = 0; e < e_count; ++e) {
    for (ad::Index c = 0; c < xl.cols(); ++c) {
      logit(e, c / width) += a(0, c) * leaky(xl(edges.dst[e], c) + xr(edges.src[e], c), slope);
    }
  }
  ad::Matrix alpha(e_count, heads);
  for (int h = 0; h < heads; ++h) {
    for (ad::Index e = 0; e < e_count; ++e) {
      double denom = 0.0;
      for (ad::Index f = 0; f < e_count; ++f) {
        if (edges.dst[f] == edges.dst[e]) denom += std::exp(logit(f, h));
      }
      alpha(e, h) = std::exp(logit(e, h)) / denom;
    }
  }
  return alpha;
}

ad::Matrix compgat_states(const nn::ParameterStore& store, const encoder::CompGatSpec& spec, const ad::Matrix& states,
                          const graph::EdgeList& edges, const ad::Matrix& alpha, int heads, double slope) {
  const ad::Matrix xl = states * store.at(spec.left), xr = states * store.at(spec.right);
  const ad::Index hidden = states.cols(), width = hidden / heads;
  ad::Matrix incoming = ad::Matrix::Zero(states.rows(), hidden);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    ad::Matrix pair(1, 2 * hidden);
    pair << xl.row(edges.dst[e]), xr.row(edges.src[e]);
    ad::Matrix msg = pair * store.at(spec.message);
    for (ad::Index c = 0; c < hidden; ++c) incoming(edges.dst[e], c) += alpha(static_cast<ad::Index>(e), c / width) * msg(0, c);
  }
  ad::Matrix out = layer_norm(states + incoming * store.at(spec.output), store.at(spec.norm_gain), store.at(spec.norm_bias));
  return out.unaryExpr([slope](double x) { return leaky(x, slope); });
}

RandomEdges random_edges(int n, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> node(0, n - 1);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  RandomEdges out;
  std::vector<double> raw;
  for (int k = 0; k < count; ++k) {
    int s = node(rng), d = node(rng);
    if (s == d) continue;
    out.edges.src.push_back(s);
    out.edges.dst.push_back(d);
    raw.push_back(std::floor(u(rng)));
  }
  out.strengths = graph::normalize_per_destination(raw, out.edges.dst);
  return out;
}

ad::Matrix random_matrix(ad::Index rows, ad::Index cols, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  ad::Matrix m(rows, cols);
  for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

}  // namespace dppdcc::fixtures
