#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "gsan/error.hpp"
#include "gsan/matrix.hpp"

namespace gsan {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Immutable square sparse matrix in compressed-row form. Products traverse
/// rows in index order, so the summation order is fixed and results are
/// reproducible.
class SparseOperator {
 public:
  SparseOperator() = default;

  SparseOperator(int dim, std::vector<Triplet> entries) : n_(dim) {
    for (const Triplet& t : entries) {
      if (t.row < 0 || t.row >= dim || t.col < 0 || t.col >= dim)
        throw Error(ErrorCode::IndexOutOfRange,
                    "entry (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                        ") outside " + std::to_string(dim) + "x" + std::to_string(dim));
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (std::size_t k = 1; k < entries.size(); ++k) {
      if (entries[k].row == entries[k - 1].row && entries[k].col == entries[k - 1].col)
        throw std::invalid_argument("duplicate sparse entry (" + std::to_string(entries[k].row) +
                                    ", " + std::to_string(entries[k].col) + ")");
    }
    row_ptr_.assign(static_cast<std::size_t>(dim) + 1, 0);
    cols_.reserve(entries.size());
    values_.reserve(entries.size());
    for (const Triplet& t : entries) {
      ++row_ptr_[static_cast<std::size_t>(t.row) + 1];
      cols_.push_back(t.col);
      values_.push_back(t.value);
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(dim); ++i) row_ptr_[i + 1] += row_ptr_[i];
  }

  int dim() const { return n_; }
  std::size_t nnz() const { return values_.size(); }
  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& cols() const { return cols_; }
  const std::vector<double>& values() const { return values_; }

  /// Entry lookup for tests and diagnostics; zero when absent.
  double at(int i, int j) const {
    const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - cols_.begin())];
  }

  /// Y = op * X (sparse-dense product).
  Matrix apply(const Matrix& x) const {
    if (x.rows() != static_cast<std::size_t>(n_))
      throw Error(ErrorCode::DimensionMismatch,
                  "operator dim " + std::to_string(n_) + " vs matrix rows " +
                      std::to_string(x.rows()));
    Matrix y(x.rows(), x.cols());
    const std::size_t d = x.cols();
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_); ++i) {
      double* yrow = y.row(i);
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        const double v = values_[k];
        const double* xrow = x.row(static_cast<std::size_t>(cols_[k]));
        for (std::size_t j = 0; j < d; ++j) yrow[j] += v * xrow[j];
      }
    }
    return y;
  }

  /// Y = op^T * X, computed by scattering over the stored rows.
  Matrix apply_transpose(const Matrix& x) const {
    if (x.rows() != static_cast<std::size_t>(n_))
      throw Error(ErrorCode::DimensionMismatch,
                  "operator dim " + std::to_string(n_) + " vs matrix rows " +
                      std::to_string(x.rows()));
    Matrix y(x.rows(), x.cols());
    const std::size_t d = x.cols();
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_); ++i) {
      const double* xrow = x.row(i);
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        const double v = values_[k];
        double* yrow = y.row(static_cast<std::size_t>(cols_[k]));
        for (std::size_t j = 0; j < d; ++j) yrow[j] += v * xrow[j];
      }
    }
    return y;
  }

 private:
  int n_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<int> cols_;
  std::vector<double> values_;
};

inline Matrix apply(const SparseOperator& op, const Matrix& x) { return op.apply(x); }

/// op applied t times to X; dense powers are never materialized.
inline Matrix apply_power(const SparseOperator& op, int t, const Matrix& x) {
  if (t < 1) throw std::invalid_argument("power must be >= 1, got " + std::to_string(t));
  Matrix y = op.apply(x);
  for (int step = 1; step < t; ++step) y = op.apply(y);
  return y;
}

}  // namespace gsan
