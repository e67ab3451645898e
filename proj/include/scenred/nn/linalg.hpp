#pragma once

#include <stdexcept>
#include <string>

#include "scenred/matrix.hpp"

namespace scenred::nn {

inline void require_shape(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

// a * b
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  require_shape(a.cols() == b.rows(), "matmul", a, b);
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto o = out.row(i);
    const auto ar = a.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double v = ar[k];
      if (v == 0.0) continue;
      const auto br = b.row(k);
      for (std::size_t j = 0; j < o.size(); ++j) o[j] += v * br[j];
    }
  }
  return out;
}

// a^T * b
inline Matrix matmul_at(const Matrix& a, const Matrix& b) {
  require_shape(a.rows() == b.rows(), "matmul_at", a, b);
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto ar = a.row(k);
    const auto br = b.row(k);
    for (std::size_t i = 0; i < ar.size(); ++i) {
      const double v = ar[i];
      if (v == 0.0) continue;
      auto o = out.row(i);
      for (std::size_t j = 0; j < o.size(); ++j) o[j] += v * br[j];
    }
  }
  return out;
}

// a * b^T
inline Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  require_shape(a.cols() == b.cols(), "matmul_bt", a, b);
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ar = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto br = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < ar.size(); ++k) s += ar[k] * br[k];
      out(i, j) = s;
    }
  }
  return out;
}

inline void add_inplace(Matrix& a, const Matrix& b) {
  require_shape(a.same_shape(b), "add", a, b);
  auto& d = a.data();
  const auto& e = b.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += e[i];
}

}  // namespace scenred::nn
