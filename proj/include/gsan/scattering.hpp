#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "gsan/matrix.hpp"
#include "gsan/sparse.hpp"

namespace gsan {

/// Wavelet cascade path (k_1, ..., k_m); nonempty, orders bounded by the
/// bank's maximum order.
struct ScatteringPath {
  std::vector<int> orders;
};

/// Diffusion wavelet filters derived from a lazy random walk operator:
/// Psi_0 = I - P and Psi_k = P^(2^(k-1)) - P^(2^k) for k >= 1. The wavelet
/// matrices are never materialized; each application runs the power cascade
/// on the signal, costing 2^k sparse products for order k.
class WaveletBank {
 public:
  WaveletBank(std::shared_ptr<const SparseOperator> walk, int max_order)
      : walk_(std::move(walk)), max_order_(max_order) {
    if (max_order_ < 0) throw std::invalid_argument("wavelet max order must be >= 0");
  }

  const SparseOperator& walk() const { return *walk_; }
  std::shared_ptr<const SparseOperator> walk_ptr() const { return walk_; }
  int max_order() const { return max_order_; }

  void check_order(int k) const {
    if (k < 0 || k > max_order_)
      throw Error(ErrorCode::OrderOutOfRange, "wavelet order " + std::to_string(k) +
                                                  " outside [0, " + std::to_string(max_order_) +
                                                  "]");
  }

  /// Psi_k X. For k >= 1 the intermediate Y = P^(2^(k-1)) X is reused to
  /// reach P^(2^k) X with one extra half-cascade.
  Matrix wavelet_apply(int k, const Matrix& x) const {
    check_order(k);
    if (k == 0) return sub(x, walk_->apply(x));
    const int half = 1 << (k - 1);
    const Matrix y = apply_power(*walk_, half, x);
    return sub(y, apply_power(*walk_, half, y));
  }

  /// U_p X = Psi_{k_m} |Psi_{k_{m-1}} ... |Psi_{k_1} X| ... |. The absolute
  /// value separates consecutive wavelets and is not applied after the final
  /// one.
  Matrix scattering_apply(const ScatteringPath& path, const Matrix& x) const {
    if (path.orders.empty()) throw std::invalid_argument("scattering path must be nonempty");
    Matrix current = x;
    for (std::size_t step = 0; step < path.orders.size(); ++step) {
      if (step > 0)
        for (double& v : current.data()) v = std::fabs(v);
      current = wavelet_apply(path.orders[step], current);
    }
    return current;
  }

 private:
  std::shared_ptr<const SparseOperator> walk_;
  int max_order_;
};

/// Elementwise |x|^q.
inline Matrix abs_pow_matrix(const Matrix& x, double q) {
  if (!(q > 0.0)) throw std::invalid_argument("exponent q must be > 0");
  Matrix y = x;
  for (double& v : y.data()) v = std::pow(std::fabs(v), q);
  return y;
}

/// The channel bank of one attention head: C_gcn low-pass channels
/// A^1 Hbar ... A^(C_gcn) Hbar followed by one band-pass channel
/// |U_p Hbar|^q per scattering path, in this fixed order.
inline std::vector<Matrix> channel_bank(const WaveletBank& bank, const SparseOperator& adjacency,
                                        const Matrix& hbar, int c_gcn,
                                        const std::vector<ScatteringPath>& paths, double q) {
  if (c_gcn < 1) throw std::invalid_argument("channel bank requires at least one GCN channel");
  if (!(q > 0.0)) throw std::invalid_argument("exponent q must be > 0");
  std::vector<Matrix> channels;
  channels.reserve(static_cast<std::size_t>(c_gcn) + paths.size());
  Matrix current = adjacency.apply(hbar);
  channels.push_back(current);
  for (int i = 1; i < c_gcn; ++i) {
    current = adjacency.apply(current);
    channels.push_back(current);
  }
  for (const ScatteringPath& path : paths)
    channels.push_back(abs_pow_matrix(bank.scattering_apply(path, hbar), q));
  return channels;
}

}  // namespace gsan
