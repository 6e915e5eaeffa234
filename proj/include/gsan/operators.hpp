#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gsan/graph.hpp"
#include "gsan/sparse.hpp"

namespace gsan {

/// A = (D+I)^{-1/2} (W+I) (D+I)^{-1/2}. Symmetric by construction: (i,j) and
/// (j,i) are filled from the identical expression. An isolated node's row
/// collapses to the unit vector e_i.
inline SparseOperator normalized_adjacency(const Graph& g) {
  const DegreeVector d = degrees(g);
  const int n = g.node_count();
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(n) + 2 * g.edge_count());
  for (int i = 0; i < n; ++i)
    entries.push_back({i, i, 1.0 / (d[static_cast<std::size_t>(i)] + 1.0)});
  for (const Edge& e : g.edges()) {
    const double value =
        e.weight / std::sqrt((d[static_cast<std::size_t>(e.u)] + 1.0) *
                             (d[static_cast<std::size_t>(e.v)] + 1.0));
    entries.push_back({e.u, e.v, value});
    entries.push_back({e.v, e.u, value});
  }
  return SparseOperator(n, std::move(entries));
}

// Both column-stochastic operators below are convex combinations of I and the
// walk step W D^{-1}. The column of W D^{-1} at a zero-degree node is defined
// as e_i (the walk stays put), which keeps every column sum at exactly one.

/// Lazy random walk P = (I + W D^{-1}) / 2; column-stochastic, P[i,i] >= 1/2.
inline SparseOperator lazy_random_walk(const Graph& g) {
  const DegreeVector d = degrees(g);
  const int n = g.node_count();
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(n) + 2 * g.edge_count());
  for (int i = 0; i < n; ++i)
    entries.push_back({i, i, d[static_cast<std::size_t>(i)] == 0.0 ? 1.0 : 0.5});
  for (const Edge& e : g.edges()) {
    entries.push_back({e.u, e.v, 0.5 * e.weight / d[static_cast<std::size_t>(e.v)]});
    entries.push_back({e.v, e.u, 0.5 * e.weight / d[static_cast<std::size_t>(e.u)]});
  }
  return SparseOperator(n, std::move(entries));
}

/// Adjustable low-pass filter A_res(alpha) = (I + alpha W D^{-1}) / (alpha+1).
/// alpha = 0 yields the identity exactly.
inline SparseOperator residual_operator(const Graph& g, double alpha) {
  if (!(alpha >= 0.0))
    throw Error(ErrorCode::NegativeAlpha,
                "residual alpha must be >= 0, got " + std::to_string(alpha));
  const DegreeVector d = degrees(g);
  const int n = g.node_count();
  std::vector<Triplet> entries;
  if (alpha == 0.0) {
    for (int i = 0; i < n; ++i) entries.push_back({i, i, 1.0});
    return SparseOperator(n, std::move(entries));
  }
  entries.reserve(static_cast<std::size_t>(n) + 2 * g.edge_count());
  const double diag = 1.0 / (alpha + 1.0);
  const double scale = alpha / (alpha + 1.0);
  for (int i = 0; i < n; ++i)
    entries.push_back({i, i, d[static_cast<std::size_t>(i)] == 0.0 ? 1.0 : diag});
  for (const Edge& e : g.edges()) {
    entries.push_back({e.u, e.v, scale * e.weight / d[static_cast<std::size_t>(e.v)]});
    entries.push_back({e.v, e.u, scale * e.weight / d[static_cast<std::size_t>(e.u)]});
  }
  return SparseOperator(n, std::move(entries));
}

}  // namespace gsan
