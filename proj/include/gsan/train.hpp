#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gsan/autodiff.hpp"
#include "gsan/data.hpp"
#include "gsan/model.hpp"
#include "gsan/rng.hpp"

namespace gsan {

enum class ModelType { Gsan, Gcn };

inline const char* model_type_name(ModelType t) { return t == ModelType::Gsan ? "gsan" : "gcn"; }

struct TrainConfig {
  ModelType model = ModelType::Gsan;
  GsanConfig gsan;
  int gcn_hidden_dim = 16;

  double learning_rate = 0.005;
  double weight_decay = 5e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_epochs = 2000;
  int patience = 100;
  std::uint64_t seed = 1;
  bool row_normalize = true;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (patience < 0 || patience > max_epochs)
      throw std::invalid_argument("patience must lie in [0, max_epochs]");
  }
};

/// Glorot/Xavier uniform on +-sqrt(6 / (fan_in + fan_out)).
inline Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

inline Matrix glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  return glorot(rows, cols, rng);
}

/// Adam optimizer state; one first/second moment slot per parameter.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
};

/// Standard Adam update with bias correction; weight decay enters the
/// gradient in the classic L2 form.
inline void adam_step(const std::vector<TensorPtr>& params, AdamState& state, double lr,
                      double beta1, double beta2, double eps, double weight_decay) {
  if (state.m.empty()) {
    for (const TensorPtr& p : params) {
      state.m.push_back(Matrix::zeros(p->value.rows(), p->value.cols()));
      state.v.push_back(Matrix::zeros(p->value.rows(), p->value.cols()));
    }
  }
  if (state.m.size() != params.size())
    throw Error(ErrorCode::ShapeMismatch, "Adam state tracks a different parameter count");
  ++state.step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& tensor = *params[p];
    if (!tensor.value.same_shape(state.m[p]))
      throw Error(ErrorCode::ShapeMismatch, "parameter shape changed under Adam");
    const bool has_grad = tensor.has_grad();
    for (std::size_t i = 0; i < tensor.value.size(); ++i) {
      const double g = (has_grad ? tensor.grad.data()[i] : 0.0) +
                       weight_decay * tensor.value.data()[i];
      double& m = state.m[p].data()[i];
      double& v = state.v[p].data()[i];
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      tensor.value.data()[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

/// Either model's learnable parameters, by value-holding tensor handles.
struct ModelParams {
  ModelType type = ModelType::Gsan;
  GsanParams gsan;
  GcnParams gcn;

  std::vector<std::pair<std::string, TensorPtr>> named() const {
    return type == ModelType::Gsan ? gsan.named() : gcn.named();
  }

  std::vector<TensorPtr> tensors() const {
    std::vector<TensorPtr> out;
    for (auto& [name, t] : named()) out.push_back(t);
    return out;
  }

  /// Deep copy of parameter values (gradients are not copied).
  ModelParams clone() const {
    ModelParams copy;
    copy.type = type;
    auto dup = [](const TensorPtr& t) -> TensorPtr {
      if (!t) return nullptr;
      auto fresh = std::make_shared<Tensor>();
      fresh->value = t->value;
      fresh->requires_grad = t->requires_grad;
      return fresh;
    };
    for (const HeadParams& head : gsan.heads)
      copy.gsan.heads.push_back({dup(head.theta), dup(head.attn)});
    copy.gsan.residual_weight = dup(gsan.residual_weight);
    copy.gsan.output_weight = dup(gsan.output_weight);
    copy.gsan.residual_bias = dup(gsan.residual_bias);
    copy.gsan.output_bias = dup(gsan.output_bias);
    copy.gcn.theta1 = dup(gcn.theta1);
    copy.gcn.theta2 = dup(gcn.theta2);
    return copy;
  }
};

inline ModelParams init_params(std::size_t d_in, std::size_t num_classes,
                               const TrainConfig& config, Rng& rng) {
  ModelParams params;
  params.type = config.model;
  if (config.model == ModelType::Gsan) {
    const auto d_head = static_cast<std::size_t>(config.gsan.head_dim);
    const auto d_mid = static_cast<std::size_t>(config.gsan.resolved_mid_dim());
    const std::size_t merged = static_cast<std::size_t>(config.gsan.heads) * d_head;
    for (int h = 0; h < config.gsan.heads; ++h) {
      HeadParams head;
      head.theta = std::make_shared<Tensor>(Tensor{glorot(d_in, d_head, rng), {}, true});
      head.attn = std::make_shared<Tensor>(Tensor{glorot(2 * d_head, 1, rng), {}, true});
      params.gsan.heads.push_back(std::move(head));
    }
    params.gsan.residual_weight =
        std::make_shared<Tensor>(Tensor{glorot(merged, d_mid, rng), {}, true});
    params.gsan.output_weight =
        std::make_shared<Tensor>(Tensor{glorot(d_mid, num_classes, rng), {}, true});
    if (config.gsan.use_bias) {
      params.gsan.residual_bias =
          std::make_shared<Tensor>(Tensor{Matrix::zeros(1, d_mid), {}, true});
      params.gsan.output_bias =
          std::make_shared<Tensor>(Tensor{Matrix::zeros(1, num_classes), {}, true});
    }
  } else {
    const auto hidden = static_cast<std::size_t>(config.gcn_hidden_dim);
    params.gcn.theta1 = std::make_shared<Tensor>(Tensor{glorot(d_in, hidden, rng), {}, true});
    params.gcn.theta2 =
        std::make_shared<Tensor>(Tensor{glorot(hidden, num_classes, rng), {}, true});
  }
  return params;
}

/// Forward pass for either model type. Dropout runs only when a generator is
/// supplied.
inline ForwardResult forward_model(Tape& tape, const ModelParams& params, const OperatorSet& ops,
                                   const TensorPtr& features, const TrainConfig& config,
                                   Rng* dropout_rng = nullptr) {
  if (params.type == ModelType::Gsan)
    return gsan_forward(tape, params.gsan, ops, features, config.gsan, dropout_rng);
  ForwardResult result;
  result.logits = gcn_forward(tape, params.gcn, ops.adjacency, features, config.gsan.dropout,
                              dropout_rng);
  return result;
}

/// Fraction of masked nodes whose argmax logit equals the label; argmax ties
/// break toward the lowest class index.
inline double accuracy(const Matrix& logits, const std::vector<int>& labels,
                       const std::vector<bool>& mask) {
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    ++total;
    const double* row = logits.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j)
      if (row[j] > row[best]) best = j;
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  if (total == 0) throw Error(ErrorCode::EmptyMask, "accuracy over an empty mask");
  return static_cast<double>(correct) / static_cast<double>(total);
}

struct EpochStats {
  double train_loss = 0.0;
  double train_acc = 0.0;
  double valid_loss = 0.0;
  double valid_acc = 0.0;
};

struct FitResult {
  ModelParams params;
  std::vector<EpochStats> curves;
  double best_valid_acc = 0.0;
  int best_epoch = 0;  // 1-based
  double test_acc = 0.0;
  int epochs_run = 0;
  std::uint64_t seed = 0;
  std::vector<HeadDiagnostics> diagnostics;  // at the restored best epoch
};

inline double evaluate(const ModelParams& params, const Dataset& dataset,
                       const std::vector<bool>& mask, const TrainConfig& config) {
  Tape tape;
  OperatorSet ops = build_operators(dataset.graph, config.gsan.residual_alpha);
  Matrix x = config.row_normalize ? row_normalized(dataset.features) : dataset.features;
  TensorPtr features = tape.constant(std::move(x));
  ForwardResult fwd = forward_model(tape, params, ops, features, config);
  return accuracy(fwd.logits->value, dataset.labels, mask);
}

namespace detail {

inline double masked_loss_value(const Matrix& logits, const std::vector<int>& labels,
                                const std::vector<bool>& mask) {
  Tape tape;
  TensorPtr t = tape.constant(logits);
  return tape.masked_cross_entropy(t, labels, mask)->value(0, 0);
}

inline void require_mask_nonempty(const std::vector<bool>& mask, const char* which) {
  for (bool b : mask)
    if (b) return;
  throw Error(ErrorCode::EmptyMask, std::string(which) + " mask is empty");
}

}  // namespace detail

/// Full training loop: Adam on the masked cross entropy of the train split,
/// per-epoch accuracy tracking, early stopping on validation accuracy with
/// best-epoch parameter restoration. Deterministic for a fixed
/// (dataset, config, seed).
inline FitResult fit(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  detail::require_mask_nonempty(dataset.train_mask, "train");
  detail::require_mask_nonempty(dataset.valid_mask, "valid");
  detail::require_mask_nonempty(dataset.test_mask, "test");

  Rng rng(config.seed);
  OperatorSet ops = build_operators(dataset.graph, config.gsan.residual_alpha);
  const Matrix features_dense =
      config.row_normalize ? row_normalized(dataset.features) : dataset.features;

  ModelParams params = init_params(dataset.features.cols(),
                                   static_cast<std::size_t>(dataset.num_classes()), config, rng);
  const std::vector<TensorPtr> tensors = params.tensors();
  AdamState adam;

  FitResult result;
  result.seed = config.seed;
  ModelParams best;
  double best_valid = -1.0;
  int best_epoch = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    // Optimization step on the train mask.
    {
      Tape tape;
      TensorPtr features = tape.constant(features_dense);
      ForwardResult fwd = forward_model(tape, params, ops, features, config, &rng);
      TensorPtr loss = tape.masked_cross_entropy(fwd.logits, dataset.labels, dataset.train_mask);
      if (!std::isfinite(loss->value(0, 0)))
        throw Error(ErrorCode::NonFiniteLoss,
                    "training loss diverged at epoch " + std::to_string(epoch));
      zero_grads(tensors);
      tape.backward(loss);
      adam_step(tensors, adam, config.learning_rate, config.adam_beta1, config.adam_beta2,
                config.adam_eps, config.weight_decay);
    }

    // Evaluation pass (no dropout).
    EpochStats stats;
    {
      Tape tape;
      TensorPtr features = tape.constant(features_dense);
      ForwardResult fwd = forward_model(tape, params, ops, features, config);
      const Matrix& logits = fwd.logits->value;
      stats.train_loss = detail::masked_loss_value(logits, dataset.labels, dataset.train_mask);
      stats.train_acc = accuracy(logits, dataset.labels, dataset.train_mask);
      stats.valid_loss = detail::masked_loss_value(logits, dataset.labels, dataset.valid_mask);
      stats.valid_acc = accuracy(logits, dataset.labels, dataset.valid_mask);
      if (!std::isfinite(stats.train_loss))
        throw Error(ErrorCode::NonFiniteLoss,
                    "evaluation loss diverged at epoch " + std::to_string(epoch));
    }
    result.curves.push_back(stats);
    result.epochs_run = epoch;

    if (stats.valid_acc > best_valid) {
      best_valid = stats.valid_acc;
      best_epoch = epoch;
      best = params.clone();
    }
    if (epoch - best_epoch >= config.patience) break;
  }

  result.params = best.clone();
  result.best_valid_acc = best_valid;
  result.best_epoch = best_epoch;

  // Final metrics and diagnostics from the restored parameters.
  {
    Tape tape;
    TensorPtr features = tape.constant(features_dense);
    ForwardResult fwd = forward_model(tape, result.params, ops, features, config);
    result.test_acc = accuracy(fwd.logits->value, dataset.labels, dataset.test_mask);
    result.diagnostics = std::move(fwd.diagnostics);
  }
  return result;
}

/// Hyperparameter grid over head count, residual alpha and head width.
struct GridSpec {
  std::vector<int> heads;
  std::vector<double> residual_alphas;
  std::vector<int> head_dims;
};

struct GridEntry {
  TrainConfig config;
  double valid_acc = 0.0;
  double test_acc = 0.0;
  int epochs = 0;
  double wall_seconds = 0.0;
};

struct GridResult {
  TrainConfig best_config;
  FitResult best_fit;
  std::vector<GridEntry> table;
};

/// Exhaustive Cartesian sweep; the best configuration is the highest
/// validation accuracy with ties broken by iteration order (heads outermost,
/// then alpha, then width).
inline GridResult grid_search(const Dataset& dataset, const TrainConfig& base,
                              const GridSpec& grid) {
  if (grid.heads.empty() || grid.residual_alphas.empty() || grid.head_dims.empty())
    throw Error(ErrorCode::EmptyGrid, "every grid axis needs at least one candidate");
  GridResult result;
  bool have_best = false;
  double best_valid = -1.0;
  for (int heads : grid.heads)
    for (double alpha : grid.residual_alphas)
      for (int head_dim : grid.head_dims) {
        TrainConfig config = base;
        config.gsan.heads = heads;
        config.gsan.residual_alpha = alpha;
        config.gsan.head_dim = head_dim;
        config.gsan.mid_dim = base.gsan.mid_dim;  // 0 keeps the square default
        const auto start = std::chrono::steady_clock::now();
        FitResult fitres = fit(dataset, config);
        const auto stop = std::chrono::steady_clock::now();
        GridEntry entry;
        entry.config = config;
        entry.valid_acc = fitres.best_valid_acc;
        entry.test_acc = fitres.test_acc;
        entry.epochs = fitres.epochs_run;
        entry.wall_seconds = std::chrono::duration<double>(stop - start).count();
        result.table.push_back(entry);
        if (!have_best || fitres.best_valid_acc > best_valid) {
          have_best = true;
          best_valid = fitres.best_valid_acc;
          result.best_config = config;
          result.best_fit = std::move(fitres);
        }
      }
  return result;
}

}  // namespace gsan
