#include "dppdcc/autograd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dppdcc::ad {

namespace {

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw std::invalid_argument("autograd: use of an unbound Var");
  return *a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  if (b.tape() != &t) throw std::invalid_argument("autograd: operands live on different tapes");
  return t;
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                "x" + std::to_string(b.cols()));
  }
}

template <typename F, typename D>
Var unary(const Var& a, F forward, D derivative) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  Matrix out = forward(a.value());
  return t.push(std::move(out), a.requires_grad(), [ia, derivative](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    tp.accumulate(ia, derivative(tp.value(ia), tp.value(self), g));
  });
}

}  // namespace

const Matrix& Var::value() const { return tape_of(*this).value(id_); }
const Matrix& Var::grad() const { return tape_of(*this).grad(id_); }
bool Var::requires_grad() const { return tape_of(*this).requires_grad(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw std::logic_error("Var::scalar on a non-1x1 value");
  return v(0, 0);
}

Var Tape::push(Matrix value, bool requires_grad, Backward backward) {
  Entry e;
  e.value = std::move(value);
  e.requires_grad = requires_grad;
  if (requires_grad) e.backward = std::move(backward);
  entries_.push_back(std::move(e));
  return Var(this, entries_.size() - 1);
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }
Var Tape::variable(Matrix value) { return push(std::move(value), true, nullptr); }
Var Tape::scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward: loss lives on another tape");
  if (value(loss.id()).size() != 1) throw std::invalid_argument("backward: loss must be 1x1");
  for (Entry& e : entries_) e.grad.resize(0, 0);
  if (!entries_[loss.id()].requires_grad) return;
  entries_[loss.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Entry& e = entries_[i];
    if (e.backward && e.grad.size() != 0) e.backward(*this, i);
  }
}

Var matmul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimension mismatch " + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()));
  }
  const std::size_t ia = a.id(), ib = b.id();
  Matrix out = a.value() * b.value();
  return t.push(std::move(out), a.requires_grad() || b.requires_grad(),
                [ia, ib](Tape& tp, std::size_t self) {
                  const Matrix& g = tp.grad(self);
                  if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
                  if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
                });
}

Var transpose(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.transpose(); },
      [](const Matrix&, const Matrix&, const Matrix& g) -> Matrix { return g.transpose(); });
}

Var add(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const std::size_t ia = a.id(), ib = b.id();
  const bool rg = a.requires_grad() || b.requires_grad();
  if (av.rows() == bv.rows() && av.cols() == bv.cols()) {
    return t.push(av + bv, rg, [ia, ib](Tape& tp, std::size_t self) {
      tp.accumulate(ia, tp.grad(self));
      tp.accumulate(ib, tp.grad(self));
    });
  }
  if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Matrix out = av.rowwise() + bv.row(0);
    return t.push(std::move(out), rg, [ia, ib](Tape& tp, std::size_t self) {
      tp.accumulate(ia, tp.grad(self));
      if (tp.requires_grad(ib)) tp.accumulate(ib, tp.grad(self).colwise().sum());
    });
  }
  if (bv.size() == 1) {
    Matrix out = av.array() + bv(0, 0);
    return t.push(std::move(out), rg, [ia, ib](Tape& tp, std::size_t self) {
      tp.accumulate(ia, tp.grad(self));
      if (tp.requires_grad(ib)) tp.accumulate(ib, Matrix::Constant(1, 1, tp.grad(self).sum()));
    });
  }
  check_same_shape(av, bv, "add");
  return {};
}

Var sub(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  check_same_shape(a.value(), b.value(), "sub");
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(a.value() - b.value(), a.requires_grad() || b.requires_grad(),
                [ia, ib](Tape& tp, std::size_t self) {
                  tp.accumulate(ia, tp.grad(self));
                  if (tp.requires_grad(ib)) tp.accumulate(ib, -tp.grad(self));
                });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const std::size_t ia = a.id(), ib = b.id();
  const bool rg = a.requires_grad() || b.requires_grad();
  if (av.rows() == bv.rows() && av.cols() == bv.cols()) {
    Matrix out = av.cwiseProduct(bv);
    return t.push(std::move(out), rg, [ia, ib](Tape& tp, std::size_t self) {
      const Matrix& g = tp.grad(self);
      if (tp.requires_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
      if (tp.requires_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
    });
  }
  if (bv.cols() == 1 && bv.rows() == av.rows()) {
    Matrix out = av.array().colwise() * bv.col(0).array();
    return t.push(std::move(out), rg, [ia, ib](Tape& tp, std::size_t self) {
      const Matrix& g = tp.grad(self);
      const Matrix& bval = tp.value(ib);
      if (tp.requires_grad(ia)) {
        Matrix ga = g.array().colwise() * bval.col(0).array();
        tp.accumulate(ia, ga);
      }
      if (tp.requires_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)).rowwise().sum());
    });
  }
  if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Matrix out = av.array().rowwise() * bv.row(0).array();
    return t.push(std::move(out), rg, [ia, ib](Tape& tp, std::size_t self) {
      const Matrix& g = tp.grad(self);
      const Matrix& bval = tp.value(ib);
      if (tp.requires_grad(ia)) {
        Matrix ga = g.array().rowwise() * bval.row(0).array();
        tp.accumulate(ia, ga);
      }
      if (tp.requires_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)).colwise().sum());
    });
  }
  check_same_shape(av, bv, "mul");
  return {};
}

Var scale(const Var& a, double s) {
  return unary(
      a, [s](const Matrix& x) -> Matrix { return x * s; },
      [s](const Matrix&, const Matrix&, const Matrix& g) -> Matrix { return g * s; });
}

Var add_scalar(const Var& a, double s) {
  return unary(
      a, [s](const Matrix& x) -> Matrix { return x.array() + s; },
      [](const Matrix&, const Matrix&, const Matrix& g) -> Matrix { return g; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary(
      a,
      [slope](const Matrix& x) -> Matrix {
        return x.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
      },
      [slope](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return g.binaryExpr(x, [slope](double gv, double xv) { return xv > 0.0 ? gv : slope * gv; });
      });
}

Var relu(const Var& a) { return leaky_relu(a, 0.0); }

Var sigmoid(const Var& a) {
  return unary(
      a,
      [](const Matrix& x) -> Matrix {
        return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      },
      [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
        return g.array() * y.array() * (1.0 - y.array());
      });
}

Var tanh(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().tanh(); },
      [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
        return g.array() * (1.0 - y.array().square());
      });
}

Var exp(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().exp(); },
      [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix { return g.cwiseProduct(y); });
}

Var log(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().log(); },
      [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix { return g.array() / x.array(); });
}

Var square(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().square(); },
      [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix { return 2.0 * g.array() * x.array(); });
}

Var abs(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().abs(); },
      [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return g.binaryExpr(x, [](double gv, double xv) { return xv > 0 ? gv : (xv < 0 ? -gv : 0.0); });
      });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  Tape& t = tape_of(parts.front());
  const Index rows = parts.front().rows();
  Index cols = 0;
  bool rg = false;
  std::vector<std::size_t> ids;
  std::vector<Index> widths;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw std::invalid_argument("concat_cols: mixed tapes");
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row count mismatch");
    cols += p.cols();
    rg = rg || p.requires_grad();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  Matrix out(rows, cols);
  Index off = 0;
  for (const Var& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return t.push(std::move(out), rg, [ids, widths](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    Index o = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (tp.requires_grad(ids[k])) tp.accumulate(ids[k], g.middleCols(o, widths[k]));
      o += widths[k];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  Tape& t = tape_of(parts.front());
  const Index cols = parts.front().cols();
  Index rows = 0;
  bool rg = false;
  std::vector<std::size_t> ids;
  std::vector<Index> heights;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw std::invalid_argument("concat_rows: mixed tapes");
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column count mismatch");
    rows += p.rows();
    rg = rg || p.requires_grad();
    ids.push_back(p.id());
    heights.push_back(p.rows());
  }
  Matrix out(rows, cols);
  Index off = 0;
  for (const Var& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  return t.push(std::move(out), rg, [ids, heights](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    Index o = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (tp.requires_grad(ids[k])) tp.accumulate(ids[k], g.middleRows(o, heights[k]));
      o += heights[k];
    }
  });
}

Var slice_cols(const Var& a, Index start, Index count) {
  Tape& t = tape_of(a);
  if (start < 0 || count < 0 || start + count > a.cols()) throw std::out_of_range("slice_cols");
  const std::size_t ia = a.id();
  const Index total = a.cols();
  return t.push(a.value().middleCols(start, count), a.requires_grad(),
                [ia, start, count, total](Tape& tp, std::size_t self) {
                  const Matrix& g = tp.grad(self);
                  Matrix ga = Matrix::Zero(g.rows(), total);
                  ga.middleCols(start, count) = g;
                  tp.accumulate(ia, ga);
                });
}

Var slice_rows(const Var& a, Index start, Index count) {
  Tape& t = tape_of(a);
  if (start < 0 || count < 0 || start + count > a.rows()) throw std::out_of_range("slice_rows");
  const std::size_t ia = a.id();
  const Index total = a.rows();
  return t.push(a.value().middleRows(start, count), a.requires_grad(),
                [ia, start, count, total](Tape& tp, std::size_t self) {
                  const Matrix& g = tp.grad(self);
                  Matrix ga = Matrix::Zero(total, g.cols());
                  ga.middleRows(start, count) = g;
                  tp.accumulate(ia, ga);
                });
}

Var gather_rows(const Var& a, std::span<const std::int32_t> index) {
  Tape& t = tape_of(a);
  const Matrix& av = a.value();
  Matrix out(static_cast<Index>(index.size()), av.cols());
  for (std::size_t e = 0; e < index.size(); ++e) {
    if (index[e] < 0 || index[e] >= av.rows()) throw std::out_of_range("gather_rows: index");
    out.row(static_cast<Index>(e)) = av.row(index[e]);
  }
  const std::size_t ia = a.id();
  const Index rows = av.rows();
  std::vector<std::int32_t> idx(index.begin(), index.end());
  return t.push(std::move(out), a.requires_grad(),
                [ia, rows, idx = std::move(idx)](Tape& tp, std::size_t self) {
                  const Matrix& g = tp.grad(self);
                  Matrix ga = Matrix::Zero(rows, g.cols());
                  for (std::size_t e = 0; e < idx.size(); ++e) ga.row(idx[e]) += g.row(static_cast<Index>(e));
                  tp.accumulate(ia, ga);
                });
}

Var scatter_add_rows(const Var& a, std::span<const std::int32_t> index, Index out_rows) {
  Tape& t = tape_of(a);
  const Matrix& av = a.value();
  if (static_cast<Index>(index.size()) != av.rows()) {
    throw std::invalid_argument("scatter_add_rows: index length must equal row count");
  }
  Matrix out = Matrix::Zero(out_rows, av.cols());
  for (std::size_t e = 0; e < index.size(); ++e) {
    if (index[e] < 0 || index[e] >= out_rows) throw std::out_of_range("scatter_add_rows: index");
    out.row(index[e]) += av.row(static_cast<Index>(e));
  }
  const std::size_t ia = a.id();
  std::vector<std::int32_t> idx(index.begin(), index.end());
  return t.push(std::move(out), a.requires_grad(), [ia, idx = std::move(idx)](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    Matrix ga(static_cast<Index>(idx.size()), g.cols());
    for (std::size_t e = 0; e < idx.size(); ++e) ga.row(static_cast<Index>(e)) = g.row(idx[e]);
    tp.accumulate(ia, ga);
  });
}

Var sum_all(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return Matrix::Constant(1, 1, x.sum()); },
      [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return Matrix::Constant(x.rows(), x.cols(), g(0, 0));
      });
}

Var mean_all(const Var& a) {
  if (a.value().size() == 0) throw std::invalid_argument("mean_all: empty input");
  return scale(sum_all(a), 1.0 / static_cast<double>(a.value().size()));
}

Var sum_rows(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.colwise().sum(); },
      [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return g.replicate(x.rows(), 1);
      });
}

Var mean_rows(const Var& a) {
  if (a.rows() == 0) throw std::invalid_argument("mean_rows: empty input");
  return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows()));
}

Var row_dot(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  check_same_shape(a.value(), b.value(), "row_dot");
  const std::size_t ia = a.id(), ib = b.id();
  Matrix out = a.value().cwiseProduct(b.value()).rowwise().sum();
  return t.push(std::move(out), a.requires_grad() || b.requires_grad(),
                [ia, ib](Tape& tp, std::size_t self) {
                  const Matrix& g = tp.grad(self);
                  if (tp.requires_grad(ia)) {
                    Matrix ga = tp.value(ib).array().colwise() * g.col(0).array();
                    tp.accumulate(ia, ga);
                  }
                  if (tp.requires_grad(ib)) {
                    Matrix gb = tp.value(ia).array().colwise() * g.col(0).array();
                    tp.accumulate(ib, gb);
                  }
                });
}

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps) {
  Tape& t = tape_of(x, gamma);
  if (beta.tape() != &t) throw std::invalid_argument("layer_norm_rows: mixed tapes");
  const Matrix& xv = x.value();
  const Index n = xv.cols();
  if (gamma.rows() != 1 || gamma.cols() != n || beta.rows() != 1 || beta.cols() != n) {
    throw std::invalid_argument("layer_norm_rows: gamma/beta must be 1xN");
  }
  Matrix xhat(xv.rows(), n);
  RowVector inv_std_t(xv.rows());
  for (Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std_t(r) = inv;
    xhat.row(r) = (xv.row(r).array() - mu) * inv;
  }
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
               beta.value().row(0).array();
  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  const bool rg = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  return t.push(std::move(out), rg,
                [ix, ig, ib, xhat = std::move(xhat), inv_std_t = std::move(inv_std_t)](Tape& tp,
                                                                                      std::size_t self) {
                  const Matrix& g = tp.grad(self);
                  if (tp.requires_grad(ig)) tp.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
                  if (tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
                  if (tp.requires_grad(ix)) {
                    Matrix dxhat = g.array().rowwise() * tp.value(ig).row(0).array();
                    Matrix dx(g.rows(), g.cols());
                    for (Index r = 0; r < g.rows(); ++r) {
                      const double m1 = dxhat.row(r).mean();
                      const double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                      dx.row(r) = inv_std_t(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
                    }
                    tp.accumulate(ix, dx);
                  }
                });
}

Var l2_normalize_rows(const Var& x, double eps) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  Eigen::VectorXd norms = xv.rowwise().norm();
  for (Index r = 0; r < norms.size(); ++r) norms(r) = std::max(norms(r), eps);
  Matrix out = xv.array().colwise() / norms.array();
  const std::size_t ix = x.id();
  return t.push(std::move(out), x.requires_grad(), [ix, norms](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    const Matrix& y = tp.value(self);
    Eigen::VectorXd proj = y.cwiseProduct(g).rowwise().sum();
    Matrix dx = (g - (y.array().colwise() * proj.array()).matrix()).array().colwise() / norms.array();
    tp.accumulate(ix, dx);
  });
}

Var segment_softmax(const Var& logits, std::span<const std::int32_t> segment, Index n_segments) {
  Tape& t = tape_of(logits);
  const Matrix& x = logits.value();
  if (static_cast<Index>(segment.size()) != x.rows()) {
    throw std::invalid_argument("segment_softmax: segment length must equal row count");
  }
  const Index h = x.cols();
  Matrix mx = Matrix::Constant(n_segments, h, -std::numeric_limits<double>::infinity());
  for (Index e = 0; e < x.rows(); ++e) {
    const auto s = segment[e];
    if (s < 0 || s >= n_segments) throw std::out_of_range("segment_softmax: segment id");
    mx.row(s) = mx.row(s).cwiseMax(x.row(e));
  }
  Matrix y(x.rows(), h);
  Matrix denom = Matrix::Zero(n_segments, h);
  for (Index e = 0; e < x.rows(); ++e) {
    y.row(e) = (x.row(e) - mx.row(segment[e])).array().exp();
    denom.row(segment[e]) += y.row(e);
  }
  for (Index e = 0; e < x.rows(); ++e) y.row(e).array() /= denom.row(segment[e]).array();
  const std::size_t ix = logits.id();
  std::vector<std::int32_t> seg(segment.begin(), segment.end());
  return t.push(std::move(y), logits.requires_grad(),
                [ix, n_segments, seg = std::move(seg)](Tape& tp, std::size_t self) {
                  const Matrix& g = tp.grad(self);
                  const Matrix& yv = tp.value(self);
                  Matrix dot = Matrix::Zero(n_segments, g.cols());
                  for (std::size_t e = 0; e < seg.size(); ++e) {
                    dot.row(seg[e]) += g.row(static_cast<Index>(e)).cwiseProduct(yv.row(static_cast<Index>(e)));
                  }
                  Matrix dx(g.rows(), g.cols());
                  for (std::size_t e = 0; e < seg.size(); ++e) {
                    const Index r = static_cast<Index>(e);
                    dx.row(r) = yv.row(r).cwiseProduct(g.row(r) - dot.row(seg[e]));
                  }
                  tp.accumulate(ix, dx);
                });
}

Var masked_softmax_rows(const Var& logits, const std::vector<bool>& key_mask) {
  Tape& t = tape_of(logits);
  const Matrix& x = logits.value();
  if (static_cast<Index>(key_mask.size()) != x.cols()) {
    throw std::invalid_argument("masked_softmax_rows: mask length must equal column count");
  }
  bool any = false;
  for (bool b : key_mask) any = any || b;
  if (!any) throw std::invalid_argument("masked_softmax_rows: every key is masked");
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Index c = 0; c < x.cols(); ++c) {
      if (key_mask[c]) mx = std::max(mx, x(r, c));
    }
    double z = 0.0;
    for (Index c = 0; c < x.cols(); ++c) {
      if (key_mask[c]) {
        y(r, c) = std::exp(x(r, c) - mx);
        z += y(r, c);
      }
    }
    for (Index c = 0; c < x.cols(); ++c) {
      if (key_mask[c]) y(r, c) /= z;
    }
  }
  const std::size_t ix = logits.id();
  return t.push(std::move(y), logits.requires_grad(), [ix](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    const Matrix& yv = tp.value(self);
    Eigen::VectorXd dot = g.cwiseProduct(yv).rowwise().sum();
    Matrix dx = yv.array() * (g.array().colwise() - dot.array());
    tp.accumulate(ix, dx);
  });
}

Var log_softmax_rows(const Var& logits) {
  Tape& t = tape_of(logits);
  const Matrix& x = logits.value();
  Matrix out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    const double lse = mx + std::log((x.row(r).array() - mx).exp().sum());
    out.row(r) = x.row(r).array() - lse;
  }
  const std::size_t ix = logits.id();
  return t.push(std::move(out), logits.requires_grad(), [ix](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    Matrix p = tp.value(self).array().exp();
    Eigen::VectorXd gs = g.rowwise().sum();
    Matrix dx = g - (p.array().colwise() * gs.array()).matrix();
    tp.accumulate(ix, dx);
  });
}

Var squared_cosine_rows(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  check_same_shape(a.value(), b.value(), "squared_cosine_rows");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const Index n = av.rows();
  Matrix out = Matrix::Zero(n, 1);
  for (Index r = 0; r < n; ++r) {
    const double na = av.row(r).squaredNorm();
    const double nb = bv.row(r).squaredNorm();
    if (na == 0.0 || nb == 0.0) continue;
    const double d = av.row(r).dot(bv.row(r));
    out(r, 0) = d * d / (na * nb);
  }
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), a.requires_grad() || b.requires_grad(),
                [ia, ib](Tape& tp, std::size_t self) {
                  const Matrix& g = tp.grad(self);
                  const Matrix& av2 = tp.value(ia);
                  const Matrix& bv2 = tp.value(ib);
                  Matrix ga = Matrix::Zero(av2.rows(), av2.cols());
                  Matrix gb = Matrix::Zero(bv2.rows(), bv2.cols());
                  for (Index r = 0; r < av2.rows(); ++r) {
                    const double na = av2.row(r).squaredNorm();
                    const double nb = bv2.row(r).squaredNorm();
                    if (na == 0.0 || nb == 0.0) continue;
                    const double d = av2.row(r).dot(bv2.row(r));
                    const double c = 2.0 * d / (na * nb) * g(r, 0);
                    ga.row(r) = c * (bv2.row(r) - (d / na) * av2.row(r));
                    gb.row(r) = c * (av2.row(r) - (d / nb) * bv2.row(r));
                  }
                  tp.accumulate(ia, ga);
                  tp.accumulate(ib, gb);
                });
}

}  // namespace dppdcc::ad
