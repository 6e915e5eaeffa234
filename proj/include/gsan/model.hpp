#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gsan/autodiff.hpp"
#include "gsan/data.hpp"
#include "gsan/error.hpp"
#include "gsan/operators.hpp"
#include "gsan/scattering.hpp"

namespace gsan {

/// Architecture of one scattering attention network. The defaults follow the
/// single-layer configuration: three GCN channels, three first-order
/// scattering channels, multi-head concatenation, residual convolution and a
/// linear classifier.
struct GsanConfig {
  int heads = 4;
  int head_dim = 16;
  int c_gcn = 3;
  std::vector<ScatteringPath> paths = {{{1}}, {{2}}, {{3}}};
  double q = 4.0;
  double leaky_slope = 0.2;
  double residual_alpha = 0.5;
  int mid_dim = 0;  // 0 means heads * head_dim (square residual layer)
  bool use_bias = false;
  double dropout = 0.5;

  int channel_count() const { return c_gcn + static_cast<int>(paths.size()); }

  int resolved_mid_dim() const { return mid_dim > 0 ? mid_dim : heads * head_dim; }

  int max_wavelet_order() const {
    int k = 0;
    for (const ScatteringPath& p : paths)
      for (int order : p.orders) k = std::max(k, order);
    return k;
  }
};

/// One attention head: the shared linear transform and the attention vector
/// scoring [Hbar || Hbar_channel] pairs.
struct HeadParams {
  TensorPtr theta;  // d_in x d_head
  TensorPtr attn;   // 2*d_head x 1
};

struct GsanParams {
  std::vector<HeadParams> heads;
  TensorPtr residual_weight;        // (heads*d_head) x d_mid
  TensorPtr output_weight;          // d_mid x K
  TensorPtr residual_bias;          // 1 x d_mid, optional
  TensorPtr output_bias;            // 1 x K, optional

  std::vector<std::pair<std::string, TensorPtr>> named() const {
    std::vector<std::pair<std::string, TensorPtr>> out;
    for (std::size_t i = 0; i < heads.size(); ++i) {
      out.emplace_back("head" + std::to_string(i) + ".theta", heads[i].theta);
      out.emplace_back("head" + std::to_string(i) + ".attn", heads[i].attn);
    }
    out.emplace_back("residual_weight", residual_weight);
    out.emplace_back("output_weight", output_weight);
    if (residual_bias) out.emplace_back("residual_bias", residual_bias);
    if (output_bias) out.emplace_back("output_bias", output_bias);
    return out;
  }
};

/// Detached per-channel attention weights of one head, for spectral analysis;
/// never part of the gradient path.
struct HeadDiagnostics {
  std::vector<std::vector<double>> alpha_gcn;
  std::vector<std::vector<double>> alpha_sct;
};

/// The constant propagation operators every layer shares. Heads are
/// parameterized independently but filter with the same operators.
struct OperatorSet {
  std::shared_ptr<const SparseOperator> adjacency;
  std::shared_ptr<const SparseOperator> walk;
  std::shared_ptr<const SparseOperator> residual;
};

inline OperatorSet build_operators(const Graph& g, double residual_alpha) {
  OperatorSet ops;
  ops.adjacency = std::make_shared<const SparseOperator>(normalized_adjacency(g));
  ops.walk = std::make_shared<const SparseOperator>(lazy_random_walk(g));
  ops.residual = std::make_shared<const SparseOperator>(residual_operator(g, residual_alpha));
  return ops;
}

namespace detail {

// Psi_k applied through the tape: the same cascade as WaveletBank but with
// tracked sparse products, so values agree bit for bit with the untracked
// path.
inline TensorPtr tracked_wavelet(Tape& tape, const std::shared_ptr<const SparseOperator>& walk,
                                 int k, const TensorPtr& x) {
  if (k == 0) return tape.sub(x, tape.spmm(walk, x));
  const int half = 1 << (k - 1);
  TensorPtr y = x;
  for (int i = 0; i < half; ++i) y = tape.spmm(walk, y);
  TensorPtr z = y;
  for (int i = 0; i < half; ++i) z = tape.spmm(walk, z);
  return tape.sub(y, z);
}

inline TensorPtr tracked_scattering(Tape& tape, const std::shared_ptr<const SparseOperator>& walk,
                                    const ScatteringPath& path, const TensorPtr& x) {
  TensorPtr current = x;
  for (std::size_t step = 0; step < path.orders.size(); ++step) {
    if (step > 0) current = tape.abs_pow(current, 1.0);
    current = tracked_wavelet(tape, walk, path.orders[step], current);
  }
  return current;
}

}  // namespace detail

/// One scattering attention head:
///   Hbar       = H_in Theta
///   channels   = [A Hbar, ..., A^Cgcn Hbar, |U_p1 Hbar|^q, ...]
///   e_c        = LeakyReLU([Hbar || channel_c] a)
///   alpha      = softmax over the C score vectors, per node
///   output     = (1/C) ReLU(sum_c alpha_c ⊙ channel_c)
/// Returns the head output and detached copies of all attention weights.
inline std::pair<TensorPtr, HeadDiagnostics> attention_head(Tape& tape, const HeadParams& params,
                                                            const OperatorSet& ops,
                                                            const TensorPtr& h_in,
                                                            const GsanConfig& config) {
  const int c_total = config.channel_count();
  if (c_total < 1) throw Error(ErrorCode::EmptyChannelList, "attention head needs C >= 1");
  if (config.c_gcn < 1)
    throw std::invalid_argument("attention head needs at least one GCN channel");

  TensorPtr hbar = tape.matmul(h_in, params.theta);

  std::vector<TensorPtr> channels;
  channels.reserve(static_cast<std::size_t>(c_total));
  TensorPtr current = hbar;
  for (int i = 0; i < config.c_gcn; ++i) {
    current = tape.spmm(ops.adjacency, current);
    channels.push_back(current);
  }
  for (const ScatteringPath& path : config.paths) {
    TensorPtr u = detail::tracked_scattering(tape, ops.walk, path, hbar);
    channels.push_back(tape.abs_pow(u, config.q));
  }

  std::vector<TensorPtr> scores;
  scores.reserve(channels.size());
  for (const TensorPtr& channel : channels)
    scores.push_back(tape.leaky_relu(tape.matmul(tape.concat_cols(hbar, channel), params.attn),
                                     config.leaky_slope));
  std::vector<TensorPtr> alphas = tape.channel_softmax(scores);

  TensorPtr aggregate = tape.row_scale(alphas[0], channels[0]);
  for (std::size_t c = 1; c < channels.size(); ++c)
    aggregate = tape.add(aggregate, tape.row_scale(alphas[c], channels[c]));
  TensorPtr output = tape.scale(tape.relu(aggregate), 1.0 / static_cast<double>(c_total));

  HeadDiagnostics diag;
  for (int c = 0; c < c_total; ++c) {
    std::vector<double> column(alphas[static_cast<std::size_t>(c)]->value.data());
    if (c < config.c_gcn)
      diag.alpha_gcn.push_back(std::move(column));
    else
      diag.alpha_sct.push_back(std::move(column));
  }
  return {output, std::move(diag)};
}

/// Column-wise concatenation of head outputs, in head order.
inline TensorPtr multi_head(Tape& tape, const std::vector<TensorPtr>& head_outputs) {
  if (head_outputs.empty()) throw Error(ErrorCode::EmptyHeadList, "multi_head needs >= 1 head");
  TensorPtr out = head_outputs[0];
  for (std::size_t i = 1; i < head_outputs.size(); ++i)
    out = tape.concat_cols(out, head_outputs[i]);
  return out;
}

/// (A_res H) W_fc with no nonlinearity; the adjustable low-pass filter that
/// suppresses the high-frequency residue of the scattering channels.
inline TensorPtr residual_conv(Tape& tape, const TensorPtr& h,
                               const std::shared_ptr<const SparseOperator>& res_op,
                               const TensorPtr& w_fc, const TensorPtr& bias = nullptr) {
  TensorPtr out = tape.matmul(tape.spmm(res_op, h), w_fc);
  if (bias) out = tape.add_bias(out, bias);
  return out;
}

inline TensorPtr residual_conv(Tape& tape, const TensorPtr& h, const Graph& g, double alpha,
                               const TensorPtr& w_fc, const TensorPtr& bias = nullptr) {
  auto op = std::make_shared<const SparseOperator>(residual_operator(g, alpha));
  return residual_conv(tape, h, op, w_fc, bias);
}

struct ForwardResult {
  TensorPtr logits;
  std::vector<HeadDiagnostics> diagnostics;
};

/// Full network: attention heads on the input features, multi-head
/// concatenation, residual convolution, then the linear classifier. Dropout
/// is active only when a generator is supplied (training mode).
inline ForwardResult gsan_forward(Tape& tape, const GsanParams& params, const OperatorSet& ops,
                                  const TensorPtr& features, const GsanConfig& config,
                                  Rng* dropout_rng = nullptr) {
  ForwardResult result;
  TensorPtr x = features;
  if (dropout_rng && config.dropout > 0.0) x = tape.dropout(x, config.dropout, *dropout_rng);
  std::vector<TensorPtr> head_outputs;
  head_outputs.reserve(params.heads.size());
  for (const HeadParams& head : params.heads) {
    auto [output, diag] = attention_head(tape, head, ops, x, config);
    head_outputs.push_back(output);
    result.diagnostics.push_back(std::move(diag));
  }
  TensorPtr merged = multi_head(tape, head_outputs);
  if (dropout_rng && config.dropout > 0.0)
    merged = tape.dropout(merged, config.dropout, *dropout_rng);
  TensorPtr hidden =
      residual_conv(tape, merged, ops.residual, params.residual_weight, params.residual_bias);
  TensorPtr logits = tape.matmul(hidden, params.output_weight);
  if (params.output_bias) logits = tape.add_bias(logits, params.output_bias);
  result.logits = logits;
  return result;
}

/// Convenience wrapper for analysis paths: builds operators and a throwaway
/// tape, runs in eval mode.
inline ForwardResult gsan_forward(const GsanParams& params, const Dataset& dataset,
                                  const GsanConfig& config, bool normalize_features = true) {
  Tape tape;
  OperatorSet ops = build_operators(dataset.graph, config.residual_alpha);
  Matrix x = normalize_features ? row_normalized(dataset.features) : dataset.features;
  TensorPtr features = tape.constant(std::move(x));
  return gsan_forward(tape, params, ops, features, config);
}

/// Two-layer GCN baseline.
struct GcnParams {
  TensorPtr theta1;
  TensorPtr theta2;

  std::vector<std::pair<std::string, TensorPtr>> named() const {
    return {{"theta1", theta1}, {"theta2", theta2}};
  }
};

/// logits = A ReLU(A X Theta1) Theta2.
inline TensorPtr gcn_forward(Tape& tape, const GcnParams& params,
                             const std::shared_ptr<const SparseOperator>& adjacency,
                             const TensorPtr& features, double dropout_rate = 0.0,
                             Rng* dropout_rng = nullptr) {
  TensorPtr x = features;
  if (dropout_rng && dropout_rate > 0.0) x = tape.dropout(x, dropout_rate, *dropout_rng);
  TensorPtr hidden = tape.relu(tape.spmm(adjacency, tape.matmul(x, params.theta1)));
  if (dropout_rng && dropout_rate > 0.0) hidden = tape.dropout(hidden, dropout_rate, *dropout_rng);
  return tape.matmul(tape.spmm(adjacency, hidden), params.theta2);
}

struct AttentionRatio {
  double global = 0.0;
  std::vector<double> per_node;
};

/// Band-pass vs. low-pass attention mass: the global ratio sums attention
/// over nodes and heads; the per-node vector sums over heads only.
inline AttentionRatio attention_ratio(const std::vector<HeadDiagnostics>& diagnostics) {
  if (diagnostics.empty()) throw Error(ErrorCode::EmptyHeadList, "attention_ratio needs >= 1 head");
  std::size_t n = 0;
  for (const HeadDiagnostics& d : diagnostics) {
    if (!d.alpha_gcn.empty()) n = d.alpha_gcn[0].size();
    if (!d.alpha_sct.empty()) n = d.alpha_sct[0].size();
  }
  std::vector<double> sct(n, 0.0), gcn(n, 0.0);
  for (const HeadDiagnostics& d : diagnostics) {
    for (const auto& column : d.alpha_gcn)
      for (std::size_t i = 0; i < n; ++i) gcn[i] += column[i];
    for (const auto& column : d.alpha_sct)
      for (std::size_t i = 0; i < n; ++i) sct[i] += column[i];
  }
  AttentionRatio result;
  result.per_node.resize(n);
  double total_sct = 0.0, total_gcn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total_sct += sct[i];
    total_gcn += gcn[i];
    result.per_node[i] = sct[i] / gcn[i];
  }
  result.global = total_sct / total_gcn;
  return result;
}

}  // namespace gsan
