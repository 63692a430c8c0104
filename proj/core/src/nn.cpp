#include "dppdcc/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace dppdcc::nn {

const std::string& ParameterStore::add(const std::string& name, Matrix value) {
  auto [it, inserted] = params_.emplace(name, std::move(value));
  if (!inserted) throw std::invalid_argument("duplicate parameter name: " + name);
  return it->first;
}

const std::string& ParameterStore::add_xavier(const std::string& name, ad::Index rows, ad::Index cols,
                                              Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return add(name, std::move(m));
}

const std::string& ParameterStore::add_constant(const std::string& name, ad::Index rows, ad::Index cols,
                                                double value) {
  return add(name, Matrix::Constant(rows, cols, value));
}

const Matrix& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

Matrix& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : params_) n += static_cast<std::size_t>(m.size());
  return n;
}

Var Binder::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Var v = tape_.variable(store_.at(name));
  bound_.emplace(name, v);
  return v;
}

Gradients Binder::gradients() const {
  Gradients out;
  for (const auto& [name, v] : bound_) {
    const Matrix& g = v.grad();
    if (g.size() != 0) out.emplace(name, g);
  }
  return out;
}

LinearSpec register_linear(ParameterStore& store, const std::string& prefix, ad::Index in, ad::Index out,
                           Rng& rng, bool bias) {
  LinearSpec spec;
  spec.weight = store.add_xavier(prefix + ".weight", in, out, rng);
  if (bias) spec.bias = store.add_constant(prefix + ".bias", 1, out, 0.0);
  return spec;
}

Var linear(Binder& b, const LinearSpec& spec, const Var& x) {
  Var y = ad::matmul(x, b(spec.weight));
  if (!spec.bias.empty()) y = ad::add(y, b(spec.bias));
  return y;
}

MlpSpec register_mlp(ParameterStore& store, const std::string& prefix, ad::Index in, ad::Index hidden,
                     ad::Index out, Rng& rng, double slope) {
  MlpSpec spec;
  spec.first = register_linear(store, prefix + ".0", in, hidden, rng);
  spec.second = register_linear(store, prefix + ".1", hidden, out, rng);
  spec.slope = slope;
  return spec;
}

Var mlp(Binder& b, const MlpSpec& spec, const Var& x) {
  return linear(b, spec.second, ad::leaky_relu(linear(b, spec.first, x), spec.slope));
}

void accumulate(Gradients& into, const Gradients& g, double weight) {
  for (const auto& [name, m] : g) {
    auto it = into.find(name);
    if (it == into.end()) {
      into.emplace(name, m * weight);
    } else {
      it->second += m * weight;
    }
  }
}

double global_norm(const Gradients& g) {
  double s = 0.0;
  for (const auto& [_, m] : g) s += m.squaredNorm();
  return std::sqrt(s);
}

void Adam::step(ParameterStore& store, const Gradients& grads) {
  ++t_;
  double clip = 1.0;
  if (options_.clip_norm > 0.0) {
    const double norm = global_norm(grads);
    if (norm > options_.clip_norm) clip = options_.clip_norm / norm;
  }
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (const auto& [name, graw] : grads) {
    Matrix& p = store.at(name);
    Matrix g = graw * clip;
    if (options_.weight_decay > 0.0) g += options_.weight_decay * p;
    auto [mit, _m] = m_.try_emplace(name, Matrix::Zero(p.rows(), p.cols()));
    auto [vit, _v] = v_.try_emplace(name, Matrix::Zero(p.rows(), p.cols()));
    mit->second = options_.beta1 * mit->second + (1.0 - options_.beta1) * g;
    vit->second = options_.beta2 * vit->second + (1.0 - options_.beta2) * g.cwiseAbs2();
    p.array() -= options_.learning_rate * (mit->second.array() / bc1) /
                 ((vit->second.array() / bc2).sqrt() + options_.epsilon);
  }
}

}  // namespace dppdcc::nn
