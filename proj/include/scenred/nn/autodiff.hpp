#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenred/matrix.hpp"
#include "scenred/nn/linalg.hpp"
#include "scenred/sparse.hpp"

namespace scenred::nn {

struct Var {
  std::size_t id = 0;
};

using Mask = std::vector<char>;  // nonzero = excluded

// Reverse-mode tape over dense matrices. Every value produced through the
// tape's operations can be differentiated by backward().
class Tape {
 public:
  Var constant(Matrix v) { return push(std::move(v), false, nullptr); }
  Var variable(Matrix v) { return push(std::move(v), true, nullptr); }

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const {
    const Matrix& m = value(v);
    if (m.size() != 1) throw std::invalid_argument("Tape::scalar: value is " + m.shape_string());
    return m.data()[0];
  }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  // Gradient accumulated for v; zero-filled if nothing reached it.
  Matrix gradient(Var v) const {
    const Node& n = nodes_[v.id];
    return n.grad.empty() ? Matrix(n.value.rows(), n.value.cols()) : n.grad;
  }

  void backward(Var loss) {
    if (value(loss).size() != 1) throw std::invalid_argument("backward: loss must be a scalar");
    grad_ref(loss).data()[0] += 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && !n.grad.empty()) n.backward(*this);
    }
  }

  std::size_t size() const { return nodes_.size(); }

  // -- operations -----------------------------------------------------------

  Var matmul(Var a, Var b) {
    Matrix out = nn::matmul(value(a), value(b));
    return push(std::move(out), any(a, b), [a, b, self = next()](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      if (t.requires_grad(a)) add_inplace(t.grad_ref(a), nn::matmul_bt(g, t.value(b)));
      if (t.requires_grad(b)) add_inplace(t.grad_ref(b), matmul_at(t.value(a), g));
    });
  }

  // a * b^T
  Var matmul_bt(Var a, Var b) {
    Matrix out = nn::matmul_bt(value(a), value(b));
    return push(std::move(out), any(a, b), [a, b, self = next()](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      if (t.requires_grad(a)) add_inplace(t.grad_ref(a), nn::matmul(g, t.value(b)));
      if (t.requires_grad(b)) add_inplace(t.grad_ref(b), matmul_at(g, t.value(a)));
    });
  }

  // S * b for a constant sparse S.
  Var spmm(std::shared_ptr<const SparseMatrix> s, Var b) {
    Matrix out = s->multiply(value(b));
    return push(std::move(out), requires_grad(b), [s, b, self = next()](Tape& t) {
      if (t.requires_grad(b)) add_inplace(t.grad_ref(b), s->multiply_transposed(t.nodes_[self].grad));
    });
  }

  Var add(Var a, Var b) {
    require_shape(value(a).same_shape(value(b)), "add", value(a), value(b));
    Matrix out = value(a);
    add_inplace(out, value(b));
    return push(std::move(out), any(a, b), [a, b, self = next()](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      if (t.requires_grad(a)) add_inplace(t.grad_ref(a), g);
      if (t.requires_grad(b)) add_inplace(t.grad_ref(b), g);
    });
  }

  Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

  // Adds the 1 x c row r to every row of a.
  Var add_row(Var a, Var r) {
    const Matrix& av = value(a);
    const Matrix& rv = value(r);
    require_shape(rv.rows() == 1 && rv.cols() == av.cols(), "add_row", av, rv);
    Matrix out = av;
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv(0, j);
    return push(std::move(out), any(a, r), [a, r, self = next()](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      if (t.requires_grad(a)) add_inplace(t.grad_ref(a), g);
      if (t.requires_grad(r)) {
        Matrix& gr = t.grad_ref(r);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
      }
    });
  }

  Var mul(Var a, Var b) {
    require_shape(value(a).same_shape(value(b)), "mul", value(a), value(b));
    Matrix out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= value(b).data()[i];
    return push(std::move(out), any(a, b), [a, b, self = next()](Tape& t) {
      const auto& g = t.nodes_[self].grad.data();
      if (t.requires_grad(a)) {
        auto& ga = t.grad_ref(a).data();
        const auto& bv = t.value(b).data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      }
      if (t.requires_grad(b)) {
        auto& gb = t.grad_ref(b).data();
        const auto& av = t.value(a).data();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      }
    });
  }

  Var scale(Var a, double s) {
    Matrix out = value(a);
    for (double& v : out.data()) v *= s;
    return push(std::move(out), requires_grad(a), [a, s, self = next()](Tape& t) {
      const auto& g = t.nodes_[self].grad.data();
      auto& ga = t.grad_ref(a).data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
    });
  }

  Var add_scalar(Var a, double s) {
    Matrix out = value(a);
    for (double& v : out.data()) v += s;
    return push(std::move(out), requires_grad(a), [a, self = next()](Tape& t) {
      add_inplace(t.grad_ref(a), t.nodes_[self].grad);
    });
  }

  Var tanh(Var a) {
    Matrix out = value(a);
    for (double& v : out.data()) v = std::tanh(v);
    return push(std::move(out), requires_grad(a), [a, self = next()](Tape& t) {
      const auto& g = t.nodes_[self].grad.data();
      const auto& y = t.nodes_[self].value.data();
      auto& ga = t.grad_ref(a).data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
  }

  Var exp(Var a) {
    Matrix out = value(a);
    for (double& v : out.data()) v = std::exp(v);
    return push(std::move(out), requires_grad(a), [a, self = next()](Tape& t) {
      const auto& g = t.nodes_[self].grad.data();
      const auto& y = t.nodes_[self].value.data();
      auto& ga = t.grad_ref(a).data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    });
  }

  Var square(Var a) { return mul(a, a); }

  // Elementwise clamp; the gradient passes where lo <= a <= hi.
  Var clamp(Var a, double lo, double hi) {
    Matrix out = value(a);
    for (double& v : out.data()) v = std::clamp(v, lo, hi);
    return push(std::move(out), requires_grad(a), [a, lo, hi, self = next()](Tape& t) {
      const auto& g = t.nodes_[self].grad.data();
      const auto& x = t.value(a).data();
      auto& ga = t.grad_ref(a).data();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (x[i] >= lo && x[i] <= hi) ga[i] += g[i];
    });
  }

  // Elementwise minimum; ties send the gradient to a.
  Var minimum(Var a, Var b) {
    require_shape(value(a).same_shape(value(b)), "minimum", value(a), value(b));
    Matrix out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::min(out.data()[i], value(b).data()[i]);
    return push(std::move(out), any(a, b), [a, b, self = next()](Tape& t) {
      const auto& g = t.nodes_[self].grad.data();
      const auto& av = t.value(a).data();
      const auto& bv = t.value(b).data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const bool to_a = av[i] <= bv[i];
        if (to_a && t.requires_grad(a)) t.grad_ref(a).data()[i] += g[i];
        if (!to_a && t.requires_grad(b)) t.grad_ref(b).data()[i] += g[i];
      }
    });
  }

  // 1 x c column means.
  Var mean_rows(Var a) {
    const Matrix& av = value(a);
    if (av.rows() == 0) throw std::invalid_argument("mean_rows: empty matrix");
    Matrix out(1, av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i)
      for (std::size_t j = 0; j < av.cols(); ++j) out(0, j) += av(i, j);
    const double inv = 1.0 / static_cast<double>(av.rows());
    for (double& v : out.data()) v *= inv;
    return push(std::move(out), requires_grad(a), [a, inv, self = next()](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      Matrix& ga = t.grad_ref(a);
      for (std::size_t i = 0; i < ga.rows(); ++i)
        for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += inv * g(0, j);
    });
  }

  Var sum(Var a) {
    double s = 0.0;
    for (double v : value(a).data()) s += v;
    return push(Matrix(1, 1, s), requires_grad(a), [a, self = next()](Tape& t) {
      const double g = t.nodes_[self].grad.data()[0];
      for (double& v : t.grad_ref(a).data()) v += g;
    });
  }

  Var mean(Var a) {
    const std::size_t n = value(a).size();
    if (n == 0) throw std::invalid_argument("mean: empty matrix");
    return scale(sum(a), 1.0 / static_cast<double>(n));
  }

  // Horizontal concatenation of matrices with equal row counts.
  Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: nothing to concatenate");
    const std::size_t rows = value(parts[0]).rows();
    std::size_t cols = 0;
    bool rg = false;
    for (Var p : parts) {
      require_shape(value(p).rows() == rows, "concat_cols", value(parts[0]), value(p));
      cols += value(p).cols();
      rg = rg || requires_grad(p);
    }
    Matrix out(rows, cols);
    std::size_t c0 = 0;
    for (Var p : parts) {
      const Matrix& pv = value(p);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < pv.cols(); ++j) out(i, c0 + j) = pv(i, j);
      c0 += pv.cols();
    }
    return push(std::move(out), rg, [parts, self = next()](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      std::size_t off = 0;
      for (Var p : parts) {
        const std::size_t w = t.value(p).cols();
        if (t.requires_grad(p)) {
          Matrix& gp = t.grad_ref(p);
          for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < w; ++j) gp(i, j) += g(i, off + j);
        }
        off += w;
      }
    });
  }

  Var slice_cols(Var a, std::size_t c0, std::size_t c1) {
    const Matrix& av = value(a);
    if (c0 > c1 || c1 > av.cols()) throw std::invalid_argument("slice_cols: range out of bounds");
    Matrix out(av.rows(), c1 - c0);
    for (std::size_t i = 0; i < av.rows(); ++i)
      for (std::size_t j = c0; j < c1; ++j) out(i, j - c0) = av(i, j);
    return push(std::move(out), requires_grad(a), [a, c0, self = next()](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      Matrix& ga = t.grad_ref(a);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(i, c0 + j) += g(i, j);
    });
  }

  Var row(Var a, std::size_t r) {
    const Matrix& av = value(a);
    if (r >= av.rows()) throw std::invalid_argument("row: index out of range");
    Matrix out = Matrix::row_vector(av.row(r));
    return push(std::move(out), requires_grad(a), [a, r, self = next()](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      Matrix& ga = t.grad_ref(a);
      for (std::size_t j = 0; j < g.cols(); ++j) ga(r, j) += g(0, j);
    });
  }

  Var pick(Var a, std::size_t r, std::size_t c) {
    const Matrix& av = value(a);
    if (r >= av.rows() || c >= av.cols()) throw std::invalid_argument("pick: index out of range");
    return push(Matrix(1, 1, av(r, c)), requires_grad(a), [a, r, c, self = next()](Tape& t) {
      t.grad_ref(a)(r, c) += t.nodes_[self].grad.data()[0];
    });
  }

  // Row-wise softmax; masked columns get probability exactly 0.
  Var softmax_rows(Var a, const Mask& mask = {}) {
    Matrix out = softmax_values(value(a), mask);
    return push(std::move(out), requires_grad(a), [a, self = next()](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& y = t.nodes_[self].value;
      Matrix& ga = t.grad_ref(a);
      for (std::size_t i = 0; i < y.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
        for (std::size_t j = 0; j < y.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
      }
    });
  }

  // Row-wise log-softmax over unmasked columns; masked entries are reported
  // as 0 and receive no gradient.
  Var log_softmax_rows(Var a, const Mask& mask = {}) {
    const Matrix p = softmax_values(value(a), mask);
    Matrix out(p.rows(), p.cols());
    const Matrix& av = value(a);
    for (std::size_t i = 0; i < av.rows(); ++i) {
      const double lse = log_sum_exp(av.row(i), mask);
      for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) = masked(mask, j) ? 0.0 : av(i, j) - lse;
    }
    return push(std::move(out), requires_grad(a), [a, p, mask, self = next()](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      Matrix& ga = t.grad_ref(a);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j)
          if (!masked(mask, j)) total += g(i, j);
        for (std::size_t j = 0; j < g.cols(); ++j)
          if (!masked(mask, j)) ga(i, j) += g(i, j) - p(i, j) * total;
      }
    });
  }

  static bool masked(const Mask& mask, std::size_t j) { return !mask.empty() && mask[j]; }

  static double log_sum_exp(std::span<const double> x, const Mask& mask) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.size(); ++j)
      if (!masked(mask, j)) mx = std::max(mx, x[j]);
    if (!std::isfinite(mx)) throw std::logic_error("softmax: every entry is masked");
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
      if (!masked(mask, j)) s += std::exp(x[j] - mx);
    return mx + std::log(s);
  }

  static Matrix softmax_values(const Matrix& a, const Mask& mask) {
    if (!mask.empty() && mask.size() != a.cols()) throw std::invalid_argument("softmax: mask length mismatch");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < a.cols(); ++j)
        if (!masked(mask, j)) mx = std::max(mx, a(i, j));
      if (!std::isfinite(mx)) throw std::logic_error("softmax: every entry is masked");
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j) {
        const double e = masked(mask, j) ? 0.0 : std::exp(a(i, j) - mx);
        out(i, j) = e;
        s += e;
      }
      for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) /= s;
    }
    return out;
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::function<void(Tape&)> backward;
  };

  std::size_t next() const { return nodes_.size(); }
  bool any(Var a, Var b) const { return requires_grad(a) || requires_grad(b); }

  Var push(Matrix v, bool rg, std::function<void(Tape&)> bw) {
    nodes_.push_back({std::move(v), Matrix(), rg, rg ? std::move(bw) : nullptr});
    return Var{nodes_.size() - 1};
  }

  Matrix& grad_ref(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
    return n.grad;
  }

  std::vector<Node> nodes_;
};

}  // namespace scenred::nn
