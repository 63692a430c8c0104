#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "dppdcc/autograd.hpp"

namespace dppdcc::nn {

using ad::Matrix;
using ad::Tape;
using ad::Var;

using Rng = std::mt19937_64;

// Named trainable tensors. Ordered so that iteration, checkpoints and
// gradient reductions are deterministic.
class ParameterStore {
 public:
  // Registers a parameter with Xavier-uniform initialization.
  const std::string& add_xavier(const std::string& name, ad::Index rows, ad::Index cols, Rng& rng);
  const std::string& add_constant(const std::string& name, ad::Index rows, ad::Index cols, double value);
  const std::string& add(const std::string& name, Matrix value);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  const Matrix& at(const std::string& name) const;
  Matrix& at(const std::string& name);
  const std::map<std::string, Matrix>& all() const { return params_; }
  std::map<std::string, Matrix>& all() { return params_; }
  std::size_t scalar_count() const;

 private:
  std::map<std::string, Matrix> params_;
};

using Gradients = std::map<std::string, Matrix>;

// Binds parameters onto one tape as differentiable leaves, once per name.
class Binder {
 public:
  Binder(Tape& tape, const ParameterStore& store) : tape_(tape), store_(store) {}

  Var operator()(const std::string& name);
  Tape& tape() { return tape_; }
  const ParameterStore& store() const { return store_; }

  // Gradients of every bound parameter after tape.backward(). Unbound or
  // unreached parameters are absent.
  Gradients gradients() const;

 private:
  Tape& tape_;
  const ParameterStore& store_;
  std::unordered_map<std::string, Var> bound_;
};

struct LinearSpec {
  std::string weight;
  std::string bias;  // empty for no bias
};

LinearSpec register_linear(ParameterStore& store, const std::string& prefix, ad::Index in, ad::Index out,
                           Rng& rng, bool bias = true);
Var linear(Binder& b, const LinearSpec& spec, const Var& x);

// Linear -> LeakyReLU -> Linear.
struct MlpSpec {
  LinearSpec first;
  LinearSpec second;
  double slope = 0.2;
};

MlpSpec register_mlp(ParameterStore& store, const std::string& prefix, ad::Index in, ad::Index hidden,
                     ad::Index out, Rng& rng, double slope = 0.2);
Var mlp(Binder& b, const MlpSpec& spec, const Var& x);

void accumulate(Gradients& into, const Gradients& g, double weight = 1.0);
double global_norm(const Gradients& g);

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  double clip_norm = 0.0;  // 0 disables clipping
};

class Adam {
 public:
  explicit Adam(AdamOptions options) : options_(options) {}
  void step(ParameterStore& store, const Gradients& grads);
  std::int64_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  std::int64_t t_ = 0;
  std::map<std::string, Matrix> m_;
  std::map<std::string, Matrix> v_;
};

}  // namespace dppdcc::nn
