#pragma once

#include <cstddef>
#include <vector>

#include "gsan/error.hpp"

namespace gsan {

/// Dense row-major matrix of 64-bit floats. The only dense container used by
/// the toolkit; all summations run in a fixed traversal order so results are
/// reproducible run to run.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols, 0.0); }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {
inline void require_shapes(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::DimensionMismatch, what);
}
}  // namespace detail

/// C = A * B.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  detail::require_shapes(a.cols() == b.rows(), "matmul inner dimensions");
  Matrix c(a.rows(), b.cols());
  const std::size_t k_dim = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

/// C = A * B^T, with B stored untransposed (c x k).
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  detail::require_shapes(a.cols() == b.cols(), "matmul_nt inner dimensions");
  Matrix c(a.rows(), b.rows());
  const std::size_t k_dim = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < k_dim; ++k) acc += arow[k] * brow[k];
      crow[j] = acc;
    }
  }
  return c;
}

/// C = A^T * B, with A stored untransposed (r x k); result is k x cols(B).
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  detail::require_shapes(a.rows() == b.rows(), "matmul_tn inner dimensions");
  Matrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    const double* brow = b.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double aip = arow[p];
      if (aip == 0.0) continue;
      double* crow = c.row(p);
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  return c;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
  detail::require_shapes(a.same_shape(b), "elementwise add shapes");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

inline Matrix sub(const Matrix& a, const Matrix& b) {
  detail::require_shapes(a.same_shape(b), "elementwise sub shapes");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

inline Matrix scaled(const Matrix& a, double s) {
  Matrix c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

inline double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) {
    const double av = v < 0 ? -v : v;
    if (av > m) m = av;
  }
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  detail::require_shapes(a.same_shape(b), "max_abs_diff shapes");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a.data()[i] - b.data()[i];
    if (d < 0) d = -d;
    if (d > m) m = d;
  }
  return m;
}

}  // namespace gsan
