#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "gsan/data.hpp"
#include "gsan/train.hpp"

#include "test_util.hpp"

using namespace gsan;

namespace {

TensorPtr leaf(Matrix value) {
  return std::make_shared<Tensor>(Tensor{std::move(value), {}, true});
}

/// Strongly separable two-class SBM at ~0.9 homophily.
Dataset separable_sbm(std::uint64_t seed = 21) {
  return generate_sbm(60, 2, 0.35, 0.04, 6, 3.0, seed);
}

TrainConfig small_config() {
  TrainConfig config;
  config.gsan.heads = 2;
  config.gsan.head_dim = 6;
  config.gsan.dropout = 0.2;
  config.row_normalize = false;
  config.max_epochs = 200;
  config.patience = 40;
  return config;
}

}  // namespace

TEST_CASE("glorot initialization is seeded and bounded", "[train]") {
  const Matrix a = glorot_init(20, 30, 77);
  const Matrix b = glorot_init(20, 30, 77);
  REQUIRE(a == b);
  const Matrix c = glorot_init(20, 30, 78);
  REQUIRE_FALSE(a == c);

  const double bound = std::sqrt(6.0 / 50.0);
  double mean = 0.0;
  for (double v : a.data()) {
    REQUIRE(std::fabs(v) <= bound);
    mean += v;
  }
  // 600 samples here; widen with a dedicated draw for the mean check.
  const Matrix wide = glorot_init(100, 100, 79);
  mean = 0.0;
  for (double v : wide.data()) mean += v;
  mean /= static_cast<double>(wide.size());
  const double sigma_mean = bound / std::sqrt(3.0 * static_cast<double>(wide.size()));
  REQUIRE(std::fabs(mean) < 3.0 * sigma_mean);
}

TEST_CASE("adam first step and no-op behavior", "[train]") {
  // Zero gradient, zero state, no weight decay: parameters unchanged.
  {
    TensorPtr p = leaf(Matrix(2, 2, 1.5));
    p->grad = Matrix(2, 2, 0.0);
    AdamState state;
    adam_step({p}, state, 0.01, 0.9, 0.999, 1e-8, 0.0);
    REQUIRE(p->value == Matrix(2, 2, 1.5));
  }
  // First step with unit gradient moves every entry by about -lr.
  {
    TensorPtr p = leaf(Matrix(3, 2, 0.7));
    p->grad = Matrix(3, 2, 1.0);
    AdamState state;
    adam_step({p}, state, 0.01, 0.9, 0.999, 1e-8, 0.0);
    for (double v : p->value.data()) REQUIRE(std::fabs((v - 0.7) + 0.01) < 1e-4);
  }
  // Deterministic: identical runs produce identical parameters.
  {
    auto run = [] {
      TensorPtr p = leaf(Matrix(2, 3, 0.4));
      AdamState state;
      for (int step = 0; step < 5; ++step) {
        p->grad = Matrix(2, 3, 0.3 * (step + 1));
        adam_step({p}, state, 0.05, 0.9, 0.999, 1e-8, 1e-4);
      }
      return p->value;
    };
    REQUIRE(run() == run());
  }
  // Parameter count mismatch against existing state.
  {
    TensorPtr p = leaf(Matrix(2, 2, 0.0));
    AdamState state;
    adam_step({p}, state, 0.01, 0.9, 0.999, 1e-8, 0.0);
    TensorPtr q = leaf(Matrix(2, 2, 0.0));
    REQUIRE_THROWS_AS(adam_step({p, q}, state, 0.01, 0.9, 0.999, 1e-8, 0.0), Error);
  }
}

TEST_CASE("fit reaches high accuracy on a separable SBM", "[train]") {
  const Dataset ds = separable_sbm();
  REQUIRE(edge_homophily(ds) > 0.85);
  const FitResult result = fit(ds, small_config());
  REQUIRE(result.epochs_run <= 200);
  REQUIRE(result.test_acc >= 0.95);
  for (const EpochStats& stats : result.curves) {
    REQUIRE(std::isfinite(stats.train_loss));
    REQUIRE(std::isfinite(stats.valid_loss));
  }
}

TEST_CASE("patience zero stops after exactly one epoch", "[train]") {
  TrainConfig config = small_config();
  config.patience = 0;
  const FitResult result = fit(separable_sbm(), config);
  REQUIRE(result.epochs_run == 1);
  REQUIRE(result.best_epoch == 1);
}

TEST_CASE("fit is deterministic for a fixed seed", "[train]") {
  TrainConfig config = small_config();
  config.max_epochs = 40;
  config.patience = 40;
  const Dataset ds = separable_sbm();
  const FitResult a = fit(ds, config);
  const FitResult b = fit(ds, config);
  REQUIRE(a.epochs_run == b.epochs_run);
  REQUIRE(a.best_epoch == b.best_epoch);
  REQUIRE(a.test_acc == b.test_acc);
  REQUIRE(a.curves.size() == b.curves.size());
  for (std::size_t e = 0; e < a.curves.size(); ++e) {
    REQUIRE(a.curves[e].train_loss == b.curves[e].train_loss);
    REQUIRE(a.curves[e].valid_acc == b.curves[e].valid_acc);
  }
  const auto named_a = a.params.named();
  const auto named_b = b.params.named();
  for (std::size_t i = 0; i < named_a.size(); ++i)
    REQUIRE(named_a[i].second->value == named_b[i].second->value);

  TrainConfig other = config;
  other.seed = config.seed + 1;
  const FitResult c = fit(ds, other);
  REQUIRE_FALSE(a.params.named()[0].second->value == c.params.named()[0].second->value);
}

TEST_CASE("best epoch restoration is exact", "[train]") {
  TrainConfig config = small_config();
  config.max_epochs = 60;
  const Dataset ds = separable_sbm();
  const FitResult result = fit(ds, config);
  const double revalidated = evaluate(result.params, ds, ds.valid_mask, config);
  REQUIRE(revalidated == result.best_valid_acc);
  double best = 0.0;
  for (const EpochStats& stats : result.curves) best = std::max(best, stats.valid_acc);
  REQUIRE(result.best_valid_acc == best);
}

TEST_CASE("accuracy uses lowest-index tie breaking", "[train]") {
  Matrix logits(5, 3, 0.0);
  // Perfect predictions for the first three rows.
  logits(0, 0) = 5.0;
  logits(1, 1) = 5.0;
  logits(2, 2) = 5.0;
  logits(3, 2) = 5.0;  // wrong: label is 0
  logits(4, 1) = 5.0;  // wrong: label is 2
  const std::vector<int> labels = {0, 1, 2, 0, 2};
  const std::vector<bool> all(5, true);
  REQUIRE(accuracy(logits, labels, all) == Catch::Approx(0.6).margin(1e-15));

  // Uniform zero logits: argmax tie-break picks class 0.
  Matrix zeros(4, 3, 0.0);
  const std::vector<int> zero_labels = {0, 0, 0, 0};
  REQUIRE(accuracy(zeros, zero_labels, std::vector<bool>(4, true)) == 1.0);

  Matrix perfect(2, 2, 0.0);
  perfect(0, 0) = 1.0;
  perfect(1, 1) = 1.0;
  REQUIRE(accuracy(perfect, {0, 1}, std::vector<bool>(2, true)) == 1.0);

  REQUIRE_THROWS_AS(accuracy(zeros, zero_labels, std::vector<bool>(4, false)), Error);
}

TEST_CASE("non-finite loss aborts with a diagnostic", "[train]") {
  // Extreme feature magnitudes overflow the |.|^q channels on the first
  // forward pass.
  Dataset ds = separable_sbm();
  for (double& v : ds.features.data()) v *= 1e80;
  TrainConfig config = small_config();
  config.max_epochs = 5;
  config.patience = 5;
  try {
    fit(ds, config);
    FAIL("expected NonFiniteLoss");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::NonFiniteLoss);
  }
}

TEST_CASE("grid search sweeps the full Cartesian product", "[train]") {
  const Dataset ds = separable_sbm();
  TrainConfig base = small_config();
  base.max_epochs = 30;
  base.patience = 30;

  // Single point: that configuration is returned.
  {
    const GridResult result = grid_search(ds, base, {{2}, {0.5}, {6}});
    REQUIRE(result.table.size() == 1);
    REQUIRE(result.best_config.gsan.heads == 2);
    REQUIRE(result.best_config.gsan.head_dim == 6);
  }
  // 2x2 grid: four entries, best equals the table's max valid accuracy with
  // earliest-wins ties.
  {
    const GridResult result = grid_search(ds, base, {{1, 2}, {0.2, 0.8}, {4}});
    REQUIRE(result.table.size() == 4);
    double best = -1.0;
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < result.table.size(); ++i)
      if (result.table[i].valid_acc > best) {
        best = result.table[i].valid_acc;
        best_index = i;
      }
    REQUIRE(result.best_config.gsan.heads == result.table[best_index].config.gsan.heads);
    REQUIRE(result.best_config.gsan.residual_alpha ==
            result.table[best_index].config.gsan.residual_alpha);
    REQUIRE(result.best_fit.best_valid_acc == best);
  }
  REQUIRE_THROWS_AS(grid_search(ds, base, {{}, {0.5}, {4}}), Error);
}

TEST_CASE("gcn baseline trains through the same loop", "[train]") {
  TrainConfig config = small_config();
  config.model = ModelType::Gcn;
  config.gcn_hidden_dim = 8;
  config.gsan.dropout = 0.2;
  const FitResult result = fit(separable_sbm(), config);
  REQUIRE(result.test_acc >= 0.9);
}
