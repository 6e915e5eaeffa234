#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gsan/checkpoint.hpp"
#include "gsan/config.hpp"
#include "gsan/data.hpp"
#include "gsan/model.hpp"
#include "gsan/train.hpp"

namespace gsan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNumericFailure = 2;
inline constexpr int kExitGradcheckFailure = 3;

namespace detail {

using gsan::detail::format_double;

inline std::string fmt_acc(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return std::string(buf);
}

struct ManifestWriter {
  std::string command;
  TrainConfig config;
  std::uint64_t seed = 0;
  std::string dataset_name;
  std::string dataset_fingerprint;
  std::vector<std::string> artifacts;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["command"] = command;
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [key, value] : config_items(config)) cfg[key] = value;
    j["config"] = cfg;
    j["seed"] = seed;
    j["dataset"] = dataset_name;
    j["dataset_fingerprint"] = dataset_fingerprint;
    j["artifacts"] = artifacts;
    j["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
  }
};

inline void write_curves(const std::filesystem::path& path, const FitResult& result) {
  std::ofstream out(path, std::ios::binary);
  out << "epoch\ttrain_loss\ttrain_acc\tvalid_loss\tvalid_acc\n";
  for (std::size_t e = 0; e < result.curves.size(); ++e) {
    const EpochStats& s = result.curves[e];
    out << (e + 1) << '\t' << format_double(s.train_loss) << '\t' << fmt_acc(s.train_acc) << '\t'
        << format_double(s.valid_loss) << '\t' << fmt_acc(s.valid_acc) << '\n';
  }
}

inline void write_grid_table(const std::filesystem::path& path, const GridResult& grid) {
  std::ofstream out(path, std::ios::binary);
  bool header_done = false;
  for (const GridEntry& e : grid.table) {
    const auto items = config_items(e.config);
    if (!header_done) {
      for (const auto& [key, value] : items) out << key << '\t';
      out << "valid_acc\ttest_acc\tepochs\twall_seconds\n";
      header_done = true;
    }
    for (const auto& [key, value] : items) out << value << '\t';
    out << fmt_acc(e.valid_acc) << '\t' << fmt_acc(e.test_acc) << '\t' << e.epochs << '\t'
        << format_double(e.wall_seconds) << '\n';
  }
}

inline int exit_code_for(const Error& err) {
  return err.code() == ErrorCode::NonFiniteLoss ? kExitNumericFailure : kExitInputError;
}

}  // namespace detail

struct TrainOptions {
  std::string dataset_dir;
  std::string config_file;  // empty = defaults
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string grid_file;  // empty = single fit
  int num_seeds = 1;
};

/// train: fit on the dataset's train split, early-stop on the valid split,
/// write checkpoint + metrics + curves + manifest, print test accuracy.
inline int cmd_train(const TrainOptions& opts) {
  detail::ManifestWriter manifest;
  manifest.command = "train";
  try {
    if (!opts.grid_file.empty() && opts.num_seeds > 1)
      throw Error(ErrorCode::ParseError, "--grid and --seeds are mutually exclusive");
    if (opts.num_seeds < 1) throw Error(ErrorCode::ParseError, "--seeds must be >= 1");
    const Dataset dataset = load_dataset(opts.dataset_dir);
    TrainConfig config;
    if (!opts.config_file.empty()) config = parse_config_file(opts.config_file);
    if (opts.seed) config.seed = *opts.seed;
    manifest.config = config;
    manifest.seed = config.seed;
    manifest.dataset_name = dataset.name;
    const std::uint64_t fp = dataset_fingerprint(dataset);
    manifest.dataset_fingerprint = fingerprint_hex(fp);

    const std::filesystem::path out_dir(opts.out_dir);
    std::filesystem::create_directories(out_dir);
    const auto checkpoint_path = out_dir / "checkpoint.json";
    const auto metrics_path = out_dir / "metrics.tsv";
    const auto curves_path = out_dir / "curves.tsv";

    std::ofstream metrics(metrics_path, std::ios::binary);
    metrics << "model\tseed\theads\tresidual_alpha\thead_dim\tbest_epoch\tepochs_run\t"
               "valid_acc\ttest_acc\n";
    auto metrics_row = [&metrics](const TrainConfig& c, const FitResult& r) {
      metrics << model_type_name(c.model) << '\t' << c.seed << '\t' << c.gsan.heads << '\t'
              << detail::format_double(c.gsan.residual_alpha) << '\t' << c.gsan.head_dim << '\t'
              << r.best_epoch << '\t' << r.epochs_run << '\t' << detail::fmt_acc(r.best_valid_acc)
              << '\t' << detail::fmt_acc(r.test_acc) << '\n';
    };

    double final_test_acc = 0.0;
    if (!opts.grid_file.empty()) {
      const GridSpec grid = parse_grid_file(opts.grid_file, config);
      GridResult result = grid_search(dataset, config, grid);
      detail::write_grid_table(out_dir / "grid.tsv", result);
      manifest.artifacts.push_back((out_dir / "grid.tsv").string());
      manifest.config = result.best_config;
      metrics_row(result.best_config, result.best_fit);
      detail::write_curves(curves_path, result.best_fit);
      save_checkpoint(checkpoint_path, result.best_fit.params, result.best_config, fp);
      final_test_acc = result.best_fit.test_acc;
    } else if (opts.num_seeds > 1) {
      double sum = 0.0, sum_sq = 0.0;
      FitResult first;
      for (int s = 0; s < opts.num_seeds; ++s) {
        TrainConfig run = config;
        run.seed = config.seed + static_cast<std::uint64_t>(s);
        FitResult result = fit(dataset, run);
        metrics_row(run, result);
        sum += result.test_acc;
        sum_sq += result.test_acc * result.test_acc;
        if (s == 0) first = std::move(result);
      }
      const double mean = sum / opts.num_seeds;
      const double var = std::max(0.0, sum_sq / opts.num_seeds - mean * mean);
      metrics << "# mean_test_acc\t" << detail::fmt_acc(mean) << "\tstddev\t"
              << detail::fmt_acc(std::sqrt(var)) << '\n';
      detail::write_curves(curves_path, first);
      save_checkpoint(checkpoint_path, first.params, config, fp);
      final_test_acc = mean;
    } else {
      FitResult result = fit(dataset, config);
      metrics_row(config, result);
      detail::write_curves(curves_path, result);
      save_checkpoint(checkpoint_path, result.params, config, fp);
      final_test_acc = result.test_acc;
    }
    metrics.close();

    manifest.artifacts.push_back(checkpoint_path.string());
    manifest.artifacts.push_back(metrics_path.string());
    manifest.artifacts.push_back(curves_path.string());
    manifest.write(out_dir / "manifest.json");
    std::cout << "test_accuracy\t" << detail::fmt_acc(final_test_acc) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return detail::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

struct EvalOptions {
  std::string checkpoint_file;
  std::string dataset_dir;
  bool force = false;
  std::string out_dir;  // optional manifest location
};

/// eval: reload a checkpoint and print per-mask accuracy. The dataset
/// fingerprint must match the checkpoint unless --force is given.
inline int cmd_eval(const EvalOptions& opts) {
  detail::ManifestWriter manifest;
  manifest.command = "eval";
  try {
    const Checkpoint cp = load_checkpoint(opts.checkpoint_file);
    const Dataset dataset = load_dataset(opts.dataset_dir);
    const std::uint64_t fp = dataset_fingerprint(dataset);
    if (fp != cp.dataset_fingerprint) {
      if (!opts.force)
        throw Error(ErrorCode::FingerprintMismatch,
                    "dataset fingerprint " + fingerprint_hex(fp) +
                        " does not match checkpoint " +
                        fingerprint_hex(cp.dataset_fingerprint) + " (use --force to override)");
      std::cerr << "warning: dataset fingerprint mismatch, continuing under --force\n";
    }
    manifest.config = cp.config;
    manifest.seed = cp.config.seed;
    manifest.dataset_name = dataset.name;
    manifest.dataset_fingerprint = fingerprint_hex(fp);
    for (const auto& [name, mask] :
         std::vector<std::pair<std::string, const std::vector<bool>*>>{
             {"train", &dataset.train_mask},
             {"valid", &dataset.valid_mask},
             {"test", &dataset.test_mask}}) {
      const double acc = evaluate(cp.params, dataset, *mask, cp.config);
      std::cout << name << "_accuracy\t" << detail::fmt_acc(acc) << "\n";
    }
    if (!opts.out_dir.empty())
      manifest.write(std::filesystem::path(opts.out_dir) / "manifest.json");
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return detail::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

struct AttnRatioOptions {
  std::string checkpoint_file;
  std::string dataset_dir;
  std::string out_file = "attention_ratio.tsv";
  bool force = false;
};

/// attn-ratio: run the network, write per-node band-pass/low-pass attention
/// ratios plus a 40-bin log-spaced histogram over [1e-2, 1e2], print the
/// global ratio.
inline int cmd_attn_ratio(const AttnRatioOptions& opts) {
  detail::ManifestWriter manifest;
  manifest.command = "attn-ratio";
  try {
    const Checkpoint cp = load_checkpoint(opts.checkpoint_file);
    if (cp.config.model != ModelType::Gsan)
      throw Error(ErrorCode::ParseError, "attention ratios require a gsan checkpoint");
    const Dataset dataset = load_dataset(opts.dataset_dir);
    const std::uint64_t fp = dataset_fingerprint(dataset);
    if (fp != cp.dataset_fingerprint && !opts.force)
      throw Error(ErrorCode::FingerprintMismatch,
                  "dataset fingerprint mismatch (use --force to override)");
    manifest.config = cp.config;
    manifest.seed = cp.config.seed;
    manifest.dataset_name = dataset.name;
    manifest.dataset_fingerprint = fingerprint_hex(fp);

    ForwardResult fwd =
        gsan_forward(cp.params.gsan, dataset, cp.config.gsan, cp.config.row_normalize);
    const AttentionRatio ratio = attention_ratio(fwd.diagnostics);

    const std::filesystem::path out_path(opts.out_file);
    if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
    {
      std::ofstream out(out_path, std::ios::binary);
      out << "node\tratio\n";
      for (std::size_t i = 0; i < ratio.per_node.size(); ++i)
        out << i << '\t' << detail::format_double(ratio.per_node[i]) << '\n';
    }
    // 40 log-spaced bins over [1e-2, 1e2]; out-of-range ratios clamp to the
    // edge bins.
    constexpr int kBins = 40;
    std::vector<std::size_t> counts(kBins, 0);
    for (double r : ratio.per_node) {
      const double pos = (std::log10(r) + 2.0) / 4.0 * kBins;
      int bin = static_cast<int>(std::floor(pos));
      bin = std::max(0, std::min(kBins - 1, bin));
      ++counts[static_cast<std::size_t>(bin)];
    }
    std::filesystem::path hist_path = out_path;
    hist_path.replace_filename(out_path.stem().string() + "_hist" +
                               (out_path.has_extension() ? out_path.extension().string() : ""));
    {
      std::ofstream out(hist_path, std::ios::binary);
      out << "bin_lo\tbin_hi\tcount\n";
      for (int b = 0; b < kBins; ++b) {
        const double lo = std::pow(10.0, -2.0 + 4.0 * b / kBins);
        const double hi = std::pow(10.0, -2.0 + 4.0 * (b + 1) / kBins);
        out << detail::format_double(lo) << '\t' << detail::format_double(hi) << '\t'
            << counts[static_cast<std::size_t>(b)] << '\n';
      }
    }
    manifest.artifacts.push_back(out_path.string());
    manifest.artifacts.push_back(hist_path.string());
    manifest.write(out_path.parent_path() / (out_path.stem().string() + "_manifest.json"));
    std::cout << "global_attention_ratio\t" << detail::format_double(ratio.global) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return detail::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

struct GradcheckOptions {
  std::string config_file;  // empty = built-in small config
  bool corrupt = false;     // self-test hook: perturbs one analytic gradient
};

/// The fixed synthetic instance used by gradcheck: a 12-node, 3-class SBM
/// whose seed is chosen so no activation sits near a kink of the
/// ReLU/absolute-value family.
inline Dataset gradcheck_instance() { return generate_sbm(12, 3, 0.7, 0.15, 6, 1.5, 42); }

/// gradcheck: verify every model parameter's analytic gradient against
/// central finite differences on the built-in instance. Exit 0 iff all
/// parameters pass at 1e-4.
inline int cmd_gradcheck(const GradcheckOptions& opts) {
  try {
    TrainConfig config;
    config.gsan.heads = 2;
    config.gsan.head_dim = 4;
    config.gsan.dropout = 0.0;  // finite differences need a deterministic loss
    if (!opts.config_file.empty()) {
      config = parse_config_file(opts.config_file);
      config.gsan.dropout = 0.0;
    }
    const Dataset dataset = gradcheck_instance();
    const Matrix features =
        config.row_normalize ? row_normalized(dataset.features) : dataset.features;
    OperatorSet ops = build_operators(dataset.graph, config.gsan.residual_alpha);
    Rng rng(config.seed);
    ModelParams params = init_params(dataset.features.cols(),
                                     static_cast<std::size_t>(dataset.num_classes()), config, rng);

    auto loss_value = [&]() {
      Tape tape;
      TensorPtr x = tape.constant(features);
      ForwardResult fwd = forward_model(tape, params, ops, x, config);
      return tape.masked_cross_entropy(fwd.logits, dataset.labels, dataset.train_mask)
          ->value(0, 0);
    };

    {
      Tape tape;
      TensorPtr x = tape.constant(features);
      ForwardResult fwd = forward_model(tape, params, ops, x, config);
      TensorPtr loss = tape.masked_cross_entropy(fwd.logits, dataset.labels, dataset.train_mask);
      zero_grads(params.tensors());
      tape.backward(loss);
    }
    if (opts.corrupt) {
      Tensor& first = *params.tensors().front();
      first.grad.data()[0] += 0.05;
    }

    const FdReport report = finite_diff_check(loss_value, params.named(), 1e-5, 1e-4);
    for (const FdParamReport& entry : report.params) {
      char line[160];
      std::snprintf(line, sizeof(line), "%-24s max_rel_err %.3e  %s", entry.name.c_str(),
                    entry.max_rel_err, entry.pass ? "PASS" : "FAIL");
      std::cout << line << "\n";
    }
    char summary[160];
    std::snprintf(summary, sizeof(summary), "worst %.3e (%s)", report.worst_rel_err,
                  report.worst_param.c_str());
    std::cout << summary << "\n";
    if (!report.all_pass) {
      std::cerr << "gradcheck failed on parameter " << report.worst_param << "\n";
      return kExitGradcheckFailure;
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return detail::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

struct DatasetInfoOptions {
  std::string dataset_dir;
};

inline int cmd_dataset_info(const DatasetInfoOptions& opts) {
  try {
    const Dataset ds = load_dataset(opts.dataset_dir);
    const DatasetStats stats = dataset_stats(ds);
    auto count = [](const std::vector<bool>& mask) {
      std::size_t c = 0;
      for (bool b : mask)
        if (b) ++c;
      return c;
    };
    std::cout << "name\t" << ds.name << "\n";
    std::cout << "nodes\t" << stats.nodes << "\n";
    std::cout << "edges\t" << stats.edges << "\n";
    std::cout << "classes\t" << stats.classes << "\n";
    std::cout << "homophily\t"
              << (stats.homophily ? detail::format_double(*stats.homophily) : "n/a") << "\n";
    std::cout << "train/valid/test\t" << count(ds.train_mask) << "/" << count(ds.valid_mask)
              << "/" << count(ds.test_mask) << "\n";
    std::cout << "fingerprint\t" << fingerprint_hex(dataset_fingerprint(ds)) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return detail::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

struct DatasetSynthOptions {
  std::string out_dir;
  int nodes = 400;
  int classes = 2;
  double p_in = 0.05;
  double p_out = 0.01;
  int features = 16;
  double signal = 1.0;
  std::uint64_t seed = 1;
};

inline int cmd_dataset_synth(const DatasetSynthOptions& opts) {
  detail::ManifestWriter manifest;
  manifest.command = "dataset synth";
  try {
    const Dataset ds = generate_sbm(opts.nodes, opts.classes, opts.p_in, opts.p_out,
                                    opts.features, opts.signal, opts.seed);
    save_dataset(ds, opts.out_dir);
    manifest.seed = opts.seed;
    manifest.dataset_name = ds.name;
    manifest.dataset_fingerprint = fingerprint_hex(dataset_fingerprint(ds));
    for (const char* file : {"edges.tsv", "features.csv", "labels.txt", "splits.json"})
      manifest.artifacts.push_back((std::filesystem::path(opts.out_dir) / file).string());
    manifest.write(std::filesystem::path(opts.out_dir) / "manifest.json");
    const DatasetStats stats = dataset_stats(ds);
    std::cout << "nodes\t" << stats.nodes << "\nedges\t" << stats.edges << "\nclasses\t"
              << stats.classes << "\nhomophily\t"
              << (stats.homophily ? detail::format_double(*stats.homophily) : "n/a") << "\n";
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return detail::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace gsan::cli
