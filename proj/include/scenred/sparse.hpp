#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "scenred/matrix.hpp"

namespace scenred {

// Compressed sparse row matrix. Entries inside a row are kept in column order.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_start;  // rows + 1 offsets
  std::vector<std::size_t> col;
  std::vector<double> val;

  std::size_t nnz() const { return val.size(); }

  // Builds from (row, col, value) triplets; duplicates are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<std::tuple<std::size_t, std::size_t, double>> t) {
    std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) {
      return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    SparseMatrix s;
    s.rows = rows;
    s.cols = cols;
    s.row_start.assign(rows + 1, 0);
    for (std::size_t k = 0; k < t.size(); ++k) {
      const auto& [r, c, v] = t[k];
      if (r >= rows || c >= cols) throw std::invalid_argument("SparseMatrix: triplet out of range");
      if (k > 0 && std::get<0>(t[k - 1]) == r && std::get<1>(t[k - 1]) == c) {
        s.val.back() += v;
        continue;
      }
      s.col.push_back(c);
      s.val.push_back(v);
      s.row_start[r + 1] += 1;
    }
    for (std::size_t r = 0; r < rows; ++r) s.row_start[r + 1] += s.row_start[r];
    return s;
  }

  Matrix to_dense() const {
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k) m(r, col[k]) += val[k];
    return m;
  }

  // this * B
  Matrix multiply(const Matrix& b) const {
    if (b.rows() != cols) throw std::invalid_argument("SparseMatrix::multiply: shape mismatch");
    Matrix out(rows, b.cols());
    for (std::size_t r = 0; r < rows; ++r) {
      auto o = out.row(r);
      for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k) {
        const double v = val[k];
        const auto br = b.row(col[k]);
        for (std::size_t j = 0; j < o.size(); ++j) o[j] += v * br[j];
      }
    }
    return out;
  }

  // this^T * B
  Matrix multiply_transposed(const Matrix& b) const {
    if (b.rows() != rows) throw std::invalid_argument("SparseMatrix::multiply_transposed: shape mismatch");
    Matrix out(cols, b.cols());
    for (std::size_t r = 0; r < rows; ++r) {
      const auto br = b.row(r);
      for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k) {
        const double v = val[k];
        auto o = out.row(col[k]);
        for (std::size_t j = 0; j < o.size(); ++j) o[j] += v * br[j];
      }
    }
    return out;
  }
};

}  // namespace scenred
