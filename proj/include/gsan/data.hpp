#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "gsan/error.hpp"
#include "gsan/graph.hpp"
#include "gsan/matrix.hpp"
#include "gsan/rng.hpp"

namespace gsan {

/// Graph + node features + integer labels + disjoint train/valid/test masks.
struct Dataset {
  Graph graph;
  Matrix features;
  std::vector<int> labels;
  std::vector<bool> train_mask;
  std::vector<bool> valid_mask;
  std::vector<bool> test_mask;
  std::string name;

  int node_count() const { return graph.node_count(); }

  int num_classes() const {
    int k = 0;
    for (int label : labels) k = std::max(k, label + 1);
    return k;
  }
};

struct DatasetStats {
  int classes = 0;
  int nodes = 0;
  int edges = 0;  // undirected edges, each counted once
  std::optional<double> homophily;
};

/// Fraction of undirected edges whose endpoints share a label.
inline double edge_homophily(const Dataset& ds) {
  if (ds.graph.edge_count() == 0)
    throw Error(ErrorCode::NoEdges, "homophily undefined on an edgeless graph");
  std::size_t same = 0;
  for (const Edge& e : ds.graph.edges())
    if (ds.labels[static_cast<std::size_t>(e.u)] == ds.labels[static_cast<std::size_t>(e.v)])
      ++same;
  return static_cast<double>(same) / static_cast<double>(ds.graph.edge_count());
}

inline DatasetStats dataset_stats(const Dataset& ds) {
  DatasetStats stats;
  stats.classes = ds.num_classes();
  stats.nodes = ds.node_count();
  stats.edges = static_cast<int>(ds.graph.edge_count());
  if (stats.edges > 0) stats.homophily = edge_homophily(ds);
  return stats;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& file, std::size_t line) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw Error(ErrorCode::ParseError,
                file + ":" + std::to_string(line) + ": bad number '" + std::string(text) + "'");
  return v;
}

inline long parse_int(std::string_view text, const std::string& file, std::size_t line) {
  long v = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw Error(ErrorCode::ParseError,
                file + ":" + std::to_string(line) + ": bad integer '" + std::string(text) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Splits on runs of spaces/tabs; tolerant of either separator.
inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) parts.push_back(line.substr(start, i - start));
  }
  return parts;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    std::string_view line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = pos + 1;
  }
  return lines;
}

}  // namespace detail

/// On-disk dataset layout (version-stable):
///   edges.tsv     one "src<TAB>dst[<TAB>weight]" per line, weight default 1,
///                 half- or fully-specified undirected edges, '#' comments
///   features.csv  n rows of d0 comma-separated reals, '.' decimal, LF
///   labels.txt    n integer labels, one per line
///   splits.json   {"train": [...], "valid": [...], "test": [...]}
inline Dataset load_dataset(const std::filesystem::path& dir) {
  const std::string edges_file = (dir / "edges.tsv").string();
  const std::string features_file = (dir / "features.csv").string();
  const std::string labels_file = (dir / "labels.txt").string();
  const std::string splits_file = (dir / "splits.json").string();

  // Features establish n and d0.
  const std::string features_text = detail::read_file(features_file);
  std::vector<double> feature_values;
  std::size_t d0 = 0, n = 0;
  {
    std::size_t lineno = 0;
    for (std::string_view line : detail::lines_of(features_text)) {
      ++lineno;
      if (line.empty()) continue;
      const auto parts = detail::split(line, ',');
      if (d0 == 0)
        d0 = parts.size();
      else if (parts.size() != d0)
        throw Error(ErrorCode::ShapeMismatch,
                    features_file + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(d0) + " columns, got " + std::to_string(parts.size()));
      for (std::string_view p : parts)
        feature_values.push_back(detail::parse_double(p, features_file, lineno));
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::ParseError, features_file + ": no feature rows");
  Matrix features(n, d0);
  features.data() = std::move(feature_values);

  // Labels.
  std::vector<int> labels;
  {
    const std::string text = detail::read_file(labels_file);
    std::size_t lineno = 0;
    for (std::string_view line : detail::lines_of(text)) {
      ++lineno;
      if (line.empty()) continue;
      const long v = detail::parse_int(line, labels_file, lineno);
      if (v < 0)
        throw Error(ErrorCode::LabelOutOfRange,
                    labels_file + ":" + std::to_string(lineno) + ": negative label");
      labels.push_back(static_cast<int>(v));
    }
  }
  if (labels.size() != n)
    throw Error(ErrorCode::ShapeMismatch, labels_file + ": " + std::to_string(labels.size()) +
                                              " labels for " + std::to_string(n) + " nodes");

  // Edges.
  std::vector<Edge> edges;
  {
    const std::string text = detail::read_file(edges_file);
    std::size_t lineno = 0;
    for (std::string_view line : detail::lines_of(text)) {
      ++lineno;
      if (line.empty() || line.front() == '#') continue;
      const auto parts = detail::split_ws(line);
      if (parts.size() != 2 && parts.size() != 3)
        throw Error(ErrorCode::ParseError, edges_file + ":" + std::to_string(lineno) +
                                               ": expected 'src dst [weight]'");
      Edge e;
      e.u = static_cast<int>(detail::parse_int(parts[0], edges_file, lineno));
      e.v = static_cast<int>(detail::parse_int(parts[1], edges_file, lineno));
      e.weight = parts.size() == 3 ? detail::parse_double(parts[2], edges_file, lineno) : 1.0;
      edges.push_back(e);
    }
  }

  Dataset ds;
  ds.graph = build_graph(static_cast<int>(n), edges);
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  ds.name = dir.filename().string();

  // Splits.
  {
    const std::string text = detail::read_file(splits_file);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, splits_file + ": " + e.what());
    }
    auto read_mask = [&](const char* key) {
      std::vector<bool> mask(n, false);
      if (!j.contains(key))
        throw Error(ErrorCode::ParseError, splits_file + ": missing array '" + key + "'");
      for (const auto& idx : j.at(key)) {
        if (!idx.is_number_integer())
          throw Error(ErrorCode::ParseError, splits_file + ": non-integer index in '" +
                                                 std::string(key) + "'");
        const long v = idx.get<long>();
        if (v < 0 || static_cast<std::size_t>(v) >= n)
          throw Error(ErrorCode::IndexOutOfRange,
                      splits_file + ": index " + std::to_string(v) + " in '" + key + "'");
        mask[static_cast<std::size_t>(v)] = true;
      }
      return mask;
    };
    ds.train_mask = read_mask("train");
    ds.valid_mask = read_mask("valid");
    ds.test_mask = read_mask("test");
    for (std::size_t i = 0; i < n; ++i) {
      const int hits = static_cast<int>(ds.train_mask[i]) + static_cast<int>(ds.valid_mask[i]) +
                       static_cast<int>(ds.test_mask[i]);
      if (hits > 1)
        throw Error(ErrorCode::MaskOverlap, "node " + std::to_string(i) +
                                                " appears in more than one split");
    }
  }
  return ds;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "edges.tsv", std::ios::binary);
    for (const Edge& e : ds.graph.edges())
      out << e.u << '\t' << e.v << '\t' << detail::format_double(e.weight) << '\n';
  }
  {
    std::ofstream out(dir / "features.csv", std::ios::binary);
    for (std::size_t i = 0; i < ds.features.rows(); ++i) {
      for (std::size_t j = 0; j < ds.features.cols(); ++j) {
        if (j) out << ',';
        out << detail::format_double(ds.features(i, j));
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.txt", std::ios::binary);
    for (int label : ds.labels) out << label << '\n';
  }
  {
    nlohmann::json j;
    auto indices = [](const std::vector<bool>& mask) {
      std::vector<int> idx;
      for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) idx.push_back(static_cast<int>(i));
      return idx;
    };
    j["train"] = indices(ds.train_mask);
    j["valid"] = indices(ds.valid_mask);
    j["test"] = indices(ds.test_mask);
    std::ofstream out(dir / "splits.json", std::ios::binary);
    out << j.dump(2) << '\n';
  }
}

/// Stochastic block model with class-mean-shifted Gaussian features.
/// Communities are assigned round-robin (node i gets class i mod K) and the
/// per-class 10/20/70 train/valid/test split cycles through each class's
/// nodes by position.
inline Dataset generate_sbm(int n, int k, double p_in, double p_out, int d0,
                            double signal_strength, std::uint64_t seed) {
  if (!(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0))
    throw Error(ErrorCode::InvalidProbability,
                "need 0 <= p_out <= p_in <= 1, got p_in=" + std::to_string(p_in) +
                    " p_out=" + std::to_string(p_out));
  if (k < 2) throw std::invalid_argument("SBM needs at least two classes");
  if (n < k) throw std::invalid_argument("SBM needs at least one node per class");
  Rng rng(seed);
  Dataset ds;
  ds.name = "sbm";
  ds.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ds.labels[static_cast<std::size_t>(i)] = i % k;

  Matrix means(static_cast<std::size_t>(k), static_cast<std::size_t>(d0));
  for (double& v : means.data()) v = signal_strength * rng.normal();

  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double p = ds.labels[static_cast<std::size_t>(i)] ==
                               ds.labels[static_cast<std::size_t>(j)]
                           ? p_in
                           : p_out;
      if (rng.uniform() < p) edges.push_back({i, j, 1.0});
    }
  ds.graph = build_graph(n, edges);

  ds.features = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d0));
  for (int i = 0; i < n; ++i) {
    const int c = ds.labels[static_cast<std::size_t>(i)];
    for (int j = 0; j < d0; ++j)
      ds.features(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          means(static_cast<std::size_t>(c), static_cast<std::size_t>(j)) + rng.normal();
  }

  ds.train_mask.assign(static_cast<std::size_t>(n), false);
  ds.valid_mask.assign(static_cast<std::size_t>(n), false);
  ds.test_mask.assign(static_cast<std::size_t>(n), false);
  std::vector<int> position(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < n; ++i) {
    const int c = ds.labels[static_cast<std::size_t>(i)];
    const int slot = position[static_cast<std::size_t>(c)]++ % 10;
    if (slot == 0)
      ds.train_mask[static_cast<std::size_t>(i)] = true;
    else if (slot <= 2)
      ds.valid_mask[static_cast<std::size_t>(i)] = true;
    else
      ds.test_mask[static_cast<std::size_t>(i)] = true;
  }
  return ds;
}

/// FNV-1a over the canonical in-memory form: edges, feature bits, labels,
/// masks. Regenerating identical content yields an identical fingerprint.
inline std::uint64_t dataset_fingerprint(const Dataset& ds) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (v >> (8 * byte)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  auto mix_double = [&](double d) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(d));
    std::memcpy(&bits, &d, sizeof(bits));
    mix(bits);
  };
  mix(static_cast<std::uint64_t>(ds.node_count()));
  mix(static_cast<std::uint64_t>(ds.graph.edge_count()));
  for (const Edge& e : ds.graph.edges()) {
    mix(static_cast<std::uint64_t>(e.u));
    mix(static_cast<std::uint64_t>(e.v));
    mix_double(e.weight);
  }
  mix(static_cast<std::uint64_t>(ds.features.cols()));
  for (double v : ds.features.data()) mix_double(v);
  for (int label : ds.labels) mix(static_cast<std::uint64_t>(label));
  for (const auto* mask : {&ds.train_mask, &ds.valid_mask, &ds.test_mask})
    for (std::size_t i = 0; i < mask->size(); ++i) mix((*mask)[i] ? 1 : 0);
  return h;
}

inline std::string fingerprint_hex(std::uint64_t fp) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
  return std::string(buf);
}

/// Rows scaled to unit 1-norm; all-zero rows are left untouched.
inline Matrix row_normalized(const Matrix& x) {
  Matrix y = x;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double norm = 0.0;
    const double* row = y.row(i);
    for (std::size_t j = 0; j < y.cols(); ++j) norm += std::fabs(row[j]);
    if (norm == 0.0) continue;
    double* w = y.row(i);
    for (std::size_t j = 0; j < y.cols(); ++j) w[j] /= norm;
  }
  return y;
}

}  // namespace gsan
