#pragma once

// Tape-based reverse-mode differentiation over dense row-major matrices.
//
// Every value lives on a Tape. Ops append an entry holding the forward value
// and a closure that pushes the entry's gradient to its inputs. Because
// entries are appended in evaluation order, a reverse sweep over the tape is
// a valid topological order.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dppdcc::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Index = Eigen::Index;

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  const Matrix& grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const;
  bool requires_grad() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var variable(Matrix value);
  Var scalar(double value);

  // Seeds d(loss)/d(loss) = 1 and runs the reverse sweep. `loss` must be 1x1.
  void backward(const Var& loss);

  std::size_t size() const { return entries_.size(); }

  // Op plumbing. Not intended for callers outside of op implementations.
  using Backward = std::function<void(Tape&, std::size_t)>;
  Var push(Matrix value, bool requires_grad, Backward backward);
  const Matrix& value(std::size_t id) const { return entries_[id].value; }
  const Matrix& grad(std::size_t id) const { return entries_[id].grad; }
  bool requires_grad(std::size_t id) const { return entries_[id].requires_grad; }
  template <typename Expr>
  void accumulate(std::size_t id, const Expr& g) {
    Entry& e = entries_[id];
    if (!e.requires_grad) return;
    if (e.grad.size() == 0) {
      e.grad = g;
    } else {
      e.grad += g;
    }
  }

 private:
  struct Entry {
    Matrix value;
    Matrix grad;
    Backward backward;
    bool requires_grad = false;
  };
  std::deque<Entry> entries_;
};

// ---- elementwise and linear algebra ----

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
// Same shape, or `b` a 1xN row broadcast over the rows of `a`.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
// Elementwise product; `b` may be same shape, an Mx1 column or a 1xN row.
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var leaky_relu(const Var& a, double slope);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var square(const Var& a);
Var abs(const Var& a);

// ---- shape ----

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(const Var& a, Index start, Index count);
Var slice_rows(const Var& a, Index start, Index count);
Var gather_rows(const Var& a, std::span<const std::int32_t> index);
// out.row(index[e]) += a.row(e); output has `out_rows` rows.
Var scatter_add_rows(const Var& a, std::span<const std::int32_t> index, Index out_rows);

// ---- reductions ----

Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var sum_rows(const Var& a);   // 1xN column sums
Var mean_rows(const Var& a);  // 1xN column means
Var row_dot(const Var& a, const Var& b);  // Mx1

// ---- normalization and attention ----

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var l2_normalize_rows(const Var& x, double eps = 1e-12);
// Softmax of each column of `logits` taken within groups of rows sharing the
// same `segment` id. Rows are E, segments in [0, n_segments).
Var segment_softmax(const Var& logits, std::span<const std::int32_t> segment, Index n_segments);
// Row softmax; entries with key_mask[j] == false get probability exactly 0.
Var masked_softmax_rows(const Var& logits, const std::vector<bool>& key_mask);
Var log_softmax_rows(const Var& logits);
// Per-row squared cosine similarity. Rows where either input is the zero
// vector produce 0 and receive no gradient.
Var squared_cosine_rows(const Var& a, const Var& b);

}  // namespace dppdcc::ad
