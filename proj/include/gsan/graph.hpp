#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gsan/error.hpp"

namespace gsan {

struct Edge {
  int u = 0;
  int v = 0;
  double weight = 1.0;
};

/// Undirected weighted graph without self-loops. Edges are stored once in
/// canonical form (u < v, sorted), so two inputs describing the same graph
/// produce identical objects regardless of listing order or direction.
class Graph {
 public:
  Graph() = default;
  Graph(int node_count, std::vector<Edge> canonical_edges)
      : n_(node_count), edges_(std::move(canonical_edges)) {}

  int node_count() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;  // u < v, lexicographically sorted
};

/// Validates and symmetrizes an edge list. The input may list each undirected
/// edge once or twice (either direction); duplicate listings must agree on the
/// weight exactly.
inline Graph build_graph(int node_count, std::span<const Edge> input) {
  if (node_count < 0) throw Error(ErrorCode::IndexOutOfRange, "negative node count");
  std::map<std::pair<int, int>, double> canonical;
  for (const Edge& e : input) {
    if (e.u == e.v)
      throw Error(ErrorCode::SelfLoop, "self-loop at node " + std::to_string(e.u));
    if (e.u < 0 || e.v < 0 || e.u >= node_count || e.v >= node_count)
      throw Error(ErrorCode::IndexOutOfRange,
                  "edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                      ") exceeds node count " + std::to_string(node_count));
    if (!(e.weight > 0.0))
      throw Error(ErrorCode::NonPositiveWeight,
                  "edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) + ") has weight " +
                      std::to_string(e.weight));
    const std::pair<int, int> key{std::min(e.u, e.v), std::max(e.u, e.v)};
    auto [it, inserted] = canonical.emplace(key, e.weight);
    if (!inserted && it->second != e.weight)
      throw Error(ErrorCode::ConflictingDuplicateEdge,
                  "edge (" + std::to_string(key.first) + ", " + std::to_string(key.second) +
                      ") listed with weights " + std::to_string(it->second) + " and " +
                      std::to_string(e.weight));
  }
  std::vector<Edge> edges;
  edges.reserve(canonical.size());
  for (const auto& [key, w] : canonical) edges.push_back({key.first, key.second, w});
  return Graph(node_count, std::move(edges));
}

inline Graph build_graph(int node_count, const std::vector<Edge>& input) {
  return build_graph(node_count, std::span<const Edge>(input));
}

using DegreeVector = std::vector<double>;

/// d[i] = sum of incident edge weights of node i.
inline DegreeVector degrees(const Graph& g) {
  DegreeVector d(static_cast<std::size_t>(g.node_count()), 0.0);
  for (const Edge& e : g.edges()) {
    d[static_cast<std::size_t>(e.u)] += e.weight;
    d[static_cast<std::size_t>(e.v)] += e.weight;
  }
  return d;
}

}  // namespace gsan
