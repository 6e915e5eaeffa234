#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gsan/error.hpp"
#include "gsan/matrix.hpp"
#include "gsan/rng.hpp"
#include "gsan/sparse.hpp"

namespace gsan {

/// Autodiff-tracked dense matrix. The gradient slot stays empty until the
/// backward sweep first touches it; accumulation across multiple uses is by
/// addition.
struct Tensor {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;

  bool has_grad() const { return !grad.empty(); }

  void accumulate_grad(const Matrix& g) {
    if (grad.empty()) grad = Matrix::zeros(value.rows(), value.cols());
    for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] += g.data()[i];
  }

  void zero_grad() { grad = Matrix(); }
};

using TensorPtr = std::shared_ptr<Tensor>;

inline void zero_grads(const std::vector<TensorPtr>& tensors) {
  for (const TensorPtr& t : tensors) t->zero_grad();
}

/// Reverse-mode tape covering exactly the operation set of the GSAN forward
/// pass. Records are appended in creation order, so every record's inputs
/// precede it and a single reverse sweep implements backpropagation. A tape
/// is confined to one training run; it is not safe for concurrent mutation.
class Tape {
 public:
  TensorPtr variable(Matrix value) { return make(std::move(value), true); }
  TensorPtr constant(Matrix value) { return make(std::move(value), false); }

  std::size_t record_count() const { return records_.size(); }
  void clear() { records_.clear(); }

  /// X (r x k) times W (k x c); dX = G W^T, dW = X^T G.
  TensorPtr matmul(const TensorPtr& x, const TensorPtr& w) {
    if (x->value.cols() != w->value.rows())
      throw Error(ErrorCode::DimensionMismatch,
                  "matmul " + shape_str(x) + " x " + shape_str(w));
    TensorPtr out = make(gsan::matmul(x->value, w->value), x->requires_grad || w->requires_grad);
    if (out->requires_grad)
      push({out}, [x, w, out] {
        if (x->requires_grad) x->accumulate_grad(matmul_nt(out->grad, w->value));
        if (w->requires_grad) w->accumulate_grad(matmul_tn(x->value, out->grad));
      });
    return out;
  }

  /// Constant sparse operator applied to X; dX = op^T G.
  TensorPtr spmm(std::shared_ptr<const SparseOperator> op, const TensorPtr& x) {
    TensorPtr out = make(op->apply(x->value), x->requires_grad);
    if (out->requires_grad)
      push({out}, [op, x, out] { x->accumulate_grad(op->apply_transpose(out->grad)); });
    return out;
  }

  TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    if (!a->value.same_shape(b->value))
      throw Error(ErrorCode::DimensionMismatch, "add " + shape_str(a) + " vs " + shape_str(b));
    TensorPtr out = make(gsan::add(a->value, b->value), a->requires_grad || b->requires_grad);
    if (out->requires_grad)
      push({out}, [a, b, out] {
        if (a->requires_grad) a->accumulate_grad(out->grad);
        if (b->requires_grad) b->accumulate_grad(out->grad);
      });
    return out;
  }

  TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    if (!a->value.same_shape(b->value))
      throw Error(ErrorCode::DimensionMismatch, "sub " + shape_str(a) + " vs " + shape_str(b));
    TensorPtr out = make(gsan::sub(a->value, b->value), a->requires_grad || b->requires_grad);
    if (out->requires_grad)
      push({out}, [a, b, out] {
        if (a->requires_grad) a->accumulate_grad(out->grad);
        if (b->requires_grad) b->accumulate_grad(scaled(out->grad, -1.0));
      });
    return out;
  }

  TensorPtr scale(const TensorPtr& x, double s) {
    TensorPtr out = make(scaled(x->value, s), x->requires_grad);
    if (out->requires_grad)
      push({out}, [x, s, out] { x->accumulate_grad(scaled(out->grad, s)); });
    return out;
  }

  /// Broadcast-add a 1 x d bias row; db = column sums of G.
  TensorPtr add_bias(const TensorPtr& x, const TensorPtr& bias) {
    if (bias->value.rows() != 1 || bias->value.cols() != x->value.cols())
      throw Error(ErrorCode::DimensionMismatch,
                  "bias " + shape_str(bias) + " on " + shape_str(x));
    Matrix v = x->value;
    for (std::size_t i = 0; i < v.rows(); ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) v(i, j) += bias->value(0, j);
    TensorPtr out = make(std::move(v), x->requires_grad || bias->requires_grad);
    if (out->requires_grad)
      push({out}, [x, bias, out] {
        if (x->requires_grad) x->accumulate_grad(out->grad);
        if (bias->requires_grad) {
          Matrix db(1, out->grad.cols());
          for (std::size_t i = 0; i < out->grad.rows(); ++i)
            for (std::size_t j = 0; j < out->grad.cols(); ++j) db(0, j) += out->grad(i, j);
          bias->accumulate_grad(db);
        }
      });
    return out;
  }

  TensorPtr relu(const TensorPtr& x) { return leaky_relu(x, 0.0); }

  /// Derivative at exactly 0 takes the positive branch.
  TensorPtr leaky_relu(const TensorPtr& x, double slope) {
    Matrix v = x->value;
    for (double& e : v.data())
      if (e < 0.0) e *= slope;
    TensorPtr out = make(std::move(v), x->requires_grad);
    if (out->requires_grad)
      push({out}, [x, slope, out] {
        Matrix dx = out->grad;
        for (std::size_t i = 0; i < dx.size(); ++i)
          if (x->value.data()[i] < 0.0) dx.data()[i] *= slope;
        x->accumulate_grad(dx);
      });
    return out;
  }

  /// Elementwise |x|^q; derivative q |x|^(q-1) sign(x), taken as 0 at x = 0.
  TensorPtr abs_pow(const TensorPtr& x, double q) {
    if (!(q > 0.0)) throw std::invalid_argument("abs_pow exponent must be > 0");
    Matrix v = x->value;
    for (double& e : v.data()) e = std::pow(std::fabs(e), q);
    TensorPtr out = make(std::move(v), x->requires_grad);
    if (out->requires_grad)
      push({out}, [x, q, out] {
        Matrix dx = out->grad;
        for (std::size_t i = 0; i < dx.size(); ++i) {
          const double e = x->value.data()[i];
          double factor = 0.0;
          if (e > 0.0)
            factor = q * std::pow(e, q - 1.0);
          else if (e < 0.0)
            factor = -q * std::pow(-e, q - 1.0);
          dx.data()[i] *= factor;
        }
        x->accumulate_grad(dx);
      });
    return out;
  }

  /// Horizontal concatenation; the backward pass splits G by column range.
  TensorPtr concat_cols(const TensorPtr& a, const TensorPtr& b) {
    if (a->value.rows() != b->value.rows())
      throw Error(ErrorCode::DimensionMismatch,
                  "concat_cols " + shape_str(a) + " vs " + shape_str(b));
    const std::size_t ca = a->value.cols(), cb = b->value.cols();
    Matrix v(a->value.rows(), ca + cb);
    for (std::size_t i = 0; i < v.rows(); ++i) {
      double* dst = v.row(i);
      const double* ra = a->value.row(i);
      for (std::size_t j = 0; j < ca; ++j) dst[j] = ra[j];
      const double* rb = b->value.row(i);
      for (std::size_t j = 0; j < cb; ++j) dst[ca + j] = rb[j];
    }
    TensorPtr out = make(std::move(v), a->requires_grad || b->requires_grad);
    if (out->requires_grad)
      push({out}, [a, b, ca, cb, out] {
        if (a->requires_grad) {
          Matrix ga(out->grad.rows(), ca);
          for (std::size_t i = 0; i < ga.rows(); ++i)
            for (std::size_t j = 0; j < ca; ++j) ga(i, j) = out->grad(i, j);
          a->accumulate_grad(ga);
        }
        if (b->requires_grad) {
          Matrix gb(out->grad.rows(), cb);
          for (std::size_t i = 0; i < gb.rows(); ++i)
            for (std::size_t j = 0; j < cb; ++j) gb(i, j) = out->grad(i, ca + j);
          b->accumulate_grad(gb);
        }
      });
    return out;
  }

  /// Softmax across C score vectors, applied independently per row and
  /// stabilized by per-row max subtraction. Outputs are clamped to a tiny
  /// positive floor so downstream ratios stay finite even when a channel's
  /// exponential underflows.
  std::vector<TensorPtr> channel_softmax(const std::vector<TensorPtr>& scores) {
    if (scores.empty()) throw Error(ErrorCode::EmptyChannelList, "channel_softmax needs C >= 1");
    const std::size_t n = scores[0]->value.rows();
    bool any_grad = false;
    for (const TensorPtr& s : scores) {
      if (s->value.rows() != n || s->value.cols() != 1)
        throw Error(ErrorCode::DimensionMismatch, "channel_softmax expects n x 1 scores");
      any_grad = any_grad || s->requires_grad;
    }
    const std::size_t c = scores.size();
    std::vector<TensorPtr> alphas;
    alphas.reserve(c);
    std::vector<Matrix> values(c, Matrix(n, 1));
    for (std::size_t i = 0; i < n; ++i) {
      double m = scores[0]->value(i, 0);
      for (std::size_t ch = 1; ch < c; ++ch) m = std::max(m, scores[ch]->value(i, 0));
      double denom = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double e = std::exp(scores[ch]->value(i, 0) - m);
        values[ch](i, 0) = e;
        denom += e;
      }
      for (std::size_t ch = 0; ch < c; ++ch)
        values[ch](i, 0) = std::max(values[ch](i, 0) / denom, 1e-300);
    }
    for (std::size_t ch = 0; ch < c; ++ch) alphas.push_back(make(std::move(values[ch]), any_grad));
    if (any_grad) {
      std::vector<TensorPtr> outs = alphas;
      std::vector<TensorPtr> ins = scores;
      push(outs, [ins, outs, n, c] {
        // Row-wise softmax Jacobian: de_c = a_c (g_c - sum_j a_j g_j).
        std::vector<Matrix> dscores(c, Matrix(n, 1));
        for (std::size_t i = 0; i < n; ++i) {
          double dot = 0.0;
          for (std::size_t ch = 0; ch < c; ++ch) {
            const double g = outs[ch]->has_grad() ? outs[ch]->grad(i, 0) : 0.0;
            dot += outs[ch]->value(i, 0) * g;
          }
          for (std::size_t ch = 0; ch < c; ++ch) {
            const double g = outs[ch]->has_grad() ? outs[ch]->grad(i, 0) : 0.0;
            dscores[ch](i, 0) = outs[ch]->value(i, 0) * (g - dot);
          }
        }
        for (std::size_t ch = 0; ch < c; ++ch)
          if (ins[ch]->requires_grad) ins[ch]->accumulate_grad(dscores[ch]);
      });
    }
    return alphas;
  }

  /// Row i of the output is alpha[i] * X[i,:].
  TensorPtr row_scale(const TensorPtr& alpha, const TensorPtr& x) {
    if (alpha->value.rows() != x->value.rows() || alpha->value.cols() != 1)
      throw Error(ErrorCode::DimensionMismatch,
                  "row_scale " + shape_str(alpha) + " on " + shape_str(x));
    Matrix v = x->value;
    for (std::size_t i = 0; i < v.rows(); ++i) {
      const double a = alpha->value(i, 0);
      double* r = v.row(i);
      for (std::size_t j = 0; j < v.cols(); ++j) r[j] *= a;
    }
    TensorPtr out = make(std::move(v), alpha->requires_grad || x->requires_grad);
    if (out->requires_grad)
      push({out}, [alpha, x, out] {
        if (alpha->requires_grad) {
          Matrix da(alpha->value.rows(), 1);
          for (std::size_t i = 0; i < da.rows(); ++i) {
            double acc = 0.0;
            const double* g = out->grad.row(i);
            const double* r = x->value.row(i);
            for (std::size_t j = 0; j < x->value.cols(); ++j) acc += g[j] * r[j];
            da(i, 0) = acc;
          }
          alpha->accumulate_grad(da);
        }
        if (x->requires_grad) {
          Matrix dx = out->grad;
          for (std::size_t i = 0; i < dx.rows(); ++i) {
            const double a = alpha->value(i, 0);
            double* r = dx.row(i);
            for (std::size_t j = 0; j < dx.cols(); ++j) r[j] *= a;
          }
          x->accumulate_grad(dx);
        }
      });
    return out;
  }

  /// Inverted dropout; identity when rate is 0. The mask is drawn from the
  /// supplied stream, so a fixed seed gives a fixed mask.
  TensorPtr dropout(const TensorPtr& x, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0,1)");
    if (rate == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - rate);
    auto mask = std::make_shared<Matrix>(x->value.rows(), x->value.cols());
    Matrix v = x->value;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double m = rng.uniform() < rate ? 0.0 : keep_scale;
      mask->data()[i] = m;
      v.data()[i] *= m;
    }
    TensorPtr out = make(std::move(v), x->requires_grad);
    if (out->requires_grad)
      push({out}, [x, mask, out] {
        Matrix dx = out->grad;
        for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] *= mask->data()[i];
        x->accumulate_grad(dx);
      });
    return out;
  }

  /// Mean over masked rows of -log softmax(logits)[label]; returns a 1 x 1
  /// tensor. Log-probabilities are evaluated via log-sum-exp.
  TensorPtr masked_cross_entropy(const TensorPtr& logits, const std::vector<int>& labels,
                                 const std::vector<bool>& mask) {
    const std::size_t n = logits->value.rows(), k = logits->value.cols();
    if (labels.size() != n || mask.size() != n)
      throw Error(ErrorCode::DimensionMismatch, "labels/mask length vs logits rows");
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) ++count;
    if (count == 0) throw Error(ErrorCode::EmptyMask, "cross entropy over an empty mask");
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i] && (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k))
        throw Error(ErrorCode::LabelOutOfRange,
                    "label " + std::to_string(labels[i]) + " at node " + std::to_string(i) +
                        " outside [0, " + std::to_string(k) + ")");
    auto probs = std::make_shared<Matrix>(n, k);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      const double* row = logits->value.row(i);
      double m = row[0];
      for (std::size_t j = 1; j < k; ++j) m = std::max(m, row[j]);
      double denom = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double e = std::exp(row[j] - m);
        (*probs)(i, j) = e;
        denom += e;
      }
      for (std::size_t j = 0; j < k; ++j) (*probs)(i, j) /= denom;
      loss += std::log(denom) - (row[static_cast<std::size_t>(labels[i])] - m);
    }
    loss /= static_cast<double>(count);
    TensorPtr out = make(Matrix(1, 1, loss), logits->requires_grad);
    if (out->requires_grad) {
      auto labels_copy = std::make_shared<std::vector<int>>(labels);
      auto mask_copy = std::make_shared<std::vector<bool>>(mask);
      push({out}, [logits, probs, labels_copy, mask_copy, count, out] {
        const double g = out->grad(0, 0) / static_cast<double>(count);
        Matrix dx(logits->value.rows(), logits->value.cols());
        for (std::size_t i = 0; i < dx.rows(); ++i) {
          if (!(*mask_copy)[i]) continue;
          for (std::size_t j = 0; j < dx.cols(); ++j) dx(i, j) = g * (*probs)(i, j);
          dx(i, static_cast<std::size_t>((*labels_copy)[i])) -= g;
        }
        logits->accumulate_grad(dx);
      });
    }
    return out;
  }

  /// Sum of all entries, as a 1 x 1 tensor.
  TensorPtr sum(const TensorPtr& x) {
    double acc = 0.0;
    for (double v : x->value.data()) acc += v;
    TensorPtr out = make(Matrix(1, 1, acc), x->requires_grad);
    if (out->requires_grad)
      push({out}, [x, out] {
        x->accumulate_grad(Matrix(x->value.rows(), x->value.cols(), out->grad(0, 0)));
      });
    return out;
  }

  /// Populates grad on every requires_grad tensor reachable from the scalar
  /// loss. Gradients accumulate by addition across multiple uses.
  void backward(const TensorPtr& loss) {
    if (loss->value.rows() != 1 || loss->value.cols() != 1)
      throw Error(ErrorCode::NonScalarLoss, "backward needs a 1x1 loss, got " + shape_str(loss));
    loss->accumulate_grad(Matrix(1, 1, 1.0));
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
      bool live = false;
      for (const TensorPtr& out : it->outputs)
        if (out->has_grad()) {
          live = true;
          break;
        }
      if (live) it->pull();
    }
  }

 private:
  struct Record {
    std::vector<TensorPtr> outputs;
    std::function<void()> pull;
  };

  static std::string shape_str(const TensorPtr& t) {
    return std::to_string(t->value.rows()) + "x" + std::to_string(t->value.cols());
  }

  TensorPtr make(Matrix value, bool requires_grad) {
    auto t = std::make_shared<Tensor>();
    t->value = std::move(value);
    t->requires_grad = requires_grad;
    return t;
  }

  void push(std::vector<TensorPtr> outputs, std::function<void()> pull) {
    records_.push_back({std::move(outputs), std::move(pull)});
  }

  std::vector<Record> records_;
};

/// Per-parameter outcome of a finite-difference sweep.
struct FdParamReport {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = true;
};

struct FdReport {
  std::vector<FdParamReport> params;
  double worst_rel_err = 0.0;
  std::string worst_param;
  bool all_pass = true;
};

/// Compares analytic gradients (already present in each parameter's grad
/// slot) against central finite differences of the scalar function f, which
/// must re-evaluate the loss from the parameters' current values. The error
/// measure is |a - fd| / max(|a|, |fd|, 1e-6); the floor covers entries whose
/// gradient sits below the roundoff noise of a central difference, where a
/// pure ratio is not measurable in 64-bit precision.
inline FdReport finite_diff_check(const std::function<double()>& f,
                                  const std::vector<std::pair<std::string, TensorPtr>>& params,
                                  double step, double tol) {
  FdReport report;
  for (const auto& [name, tensor] : params) {
    FdParamReport entry;
    entry.name = name;
    Matrix& v = tensor->value;
    const Matrix analytic =
        tensor->has_grad() ? tensor->grad : Matrix::zeros(v.rows(), v.cols());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double original = v.data()[i];
      v.data()[i] = original + step;
      const double up = f();
      v.data()[i] = original - step;
      const double down = f();
      v.data()[i] = original;
      const double fd = (up - down) / (2.0 * step);
      const double a = analytic.data()[i];
      const double denom = std::max({std::fabs(a), std::fabs(fd), 1e-6});
      const double err = std::fabs(a - fd) / denom;
      if (err > entry.max_rel_err) entry.max_rel_err = err;
    }
    entry.pass = entry.max_rel_err < tol;
    if (entry.max_rel_err >= report.worst_rel_err) {
      report.worst_rel_err = entry.max_rel_err;
      report.worst_param = entry.name;
    }
    report.all_pass = report.all_pass && entry.pass;
    report.params.push_back(std::move(entry));
  }
  return report;
}

}  // namespace gsan
