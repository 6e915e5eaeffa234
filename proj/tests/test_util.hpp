#pragma once

#include <vector>

#include "gsan/graph.hpp"
#include "gsan/matrix.hpp"
#include "gsan/rng.hpp"

namespace testutil {

/// Symmetric random graph: each pair joined with probability p, weights
/// uniform in [0.5, 2). Isolated nodes are possible and intended.
inline gsan::Graph random_graph(gsan::Rng& rng, int n, double p) {
  std::vector<gsan::Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) edges.push_back({i, j, rng.uniform(0.5, 2.0)});
  return gsan::build_graph(n, edges);
}

inline gsan::Matrix random_matrix(gsan::Rng& rng, std::size_t rows, std::size_t cols,
                                  double lo = -1.0, double hi = 1.0) {
  gsan::Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

/// Random permutation; perm[old_index] = new_index.
inline std::vector<int> random_permutation(gsan::Rng& rng, int n) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[rng.index(static_cast<std::uint64_t>(i + 1))]);
  return perm;
}

inline gsan::Graph permute_graph(const gsan::Graph& g, const std::vector<int>& perm) {
  std::vector<gsan::Edge> edges;
  for (const gsan::Edge& e : g.edges())
    edges.push_back({perm[static_cast<std::size_t>(e.u)], perm[static_cast<std::size_t>(e.v)],
                     e.weight});
  return gsan::build_graph(g.node_count(), edges);
}

inline gsan::Matrix permute_rows(const gsan::Matrix& x, const std::vector<int>& perm) {
  gsan::Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y(static_cast<std::size_t>(perm[i]), j) = x(i, j);
  return y;
}

}  // namespace testutil
