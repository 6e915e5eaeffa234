#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gsan/checkpoint.hpp"
#include "gsan/cli.hpp"
#include "gsan/data.hpp"

using namespace gsan;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = GSAN_FIXTURE_DIR;

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("gsan_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path path = dir / "config.txt";
  std::ofstream out(path, std::ios::binary);
  out << body;
  return path;
}

fs::path sbm_dataset(const fs::path& dir) {
  save_dataset(generate_sbm(80, 2, 0.2, 0.04, 6, 2.0, 17), dir);
  return dir;
}

const std::string kFastConfig =
    "max_epochs = 60\npatience = 20\ndropout = 0.2\nrow_normalize = false\n"
    "heads = 2\nhead_dim = 6\n";

}  // namespace

TEST_CASE("train writes artifacts and is deterministic", "[cli]") {
  const fs::path work = temp_dir("train");
  const fs::path data = sbm_dataset(work / "data");
  const fs::path config = write_config(work, kFastConfig);

  cli::TrainOptions opts;
  opts.dataset_dir = data.string();
  opts.config_file = config.string();
  opts.out_dir = (work / "run_a").string();
  REQUIRE(cli::cmd_train(opts) == cli::kExitOk);
  REQUIRE(fs::exists(work / "run_a" / "checkpoint.json"));
  REQUIRE(fs::exists(work / "run_a" / "metrics.tsv"));
  REQUIRE(fs::exists(work / "run_a" / "curves.tsv"));
  REQUIRE(fs::exists(work / "run_a" / "manifest.json"));

  opts.out_dir = (work / "run_b").string();
  REQUIRE(cli::cmd_train(opts) == cli::kExitOk);
  REQUIRE(slurp(work / "run_a" / "metrics.tsv") == slurp(work / "run_b" / "metrics.tsv"));
  REQUIRE(slurp(work / "run_a" / "curves.tsv") == slurp(work / "run_b" / "curves.tsv"));
  REQUIRE(slurp(work / "run_a" / "checkpoint.json") == slurp(work / "run_b" / "checkpoint.json"));

  // A different seed changes the artifacts.
  opts.out_dir = (work / "run_c").string();
  opts.seed = 999;
  REQUIRE(cli::cmd_train(opts) == cli::kExitOk);
  REQUIRE(slurp(work / "run_a" / "checkpoint.json") != slurp(work / "run_c" / "checkpoint.json"));
}

TEST_CASE("train fails cleanly on a broken dataset", "[cli]") {
  const fs::path work = temp_dir("broken");
  const fs::path data = sbm_dataset(work / "data");
  fs::remove(data / "features.csv");
  cli::TrainOptions opts;
  opts.dataset_dir = data.string();
  opts.out_dir = (work / "out").string();
  REQUIRE(cli::cmd_train(opts) == cli::kExitInputError);
}

TEST_CASE("numeric divergence exits with the dedicated code", "[cli]") {
  const fs::path work = temp_dir("nonfinite");
  Dataset ds = generate_sbm(60, 2, 0.2, 0.04, 6, 2.0, 17);
  for (double& v : ds.features.data()) v *= 1e80;  // overflows the |.|^q channels
  save_dataset(ds, work / "data");
  const fs::path config = write_config(work, kFastConfig);
  cli::TrainOptions opts;
  opts.dataset_dir = (work / "data").string();
  opts.config_file = config.string();
  opts.out_dir = (work / "out").string();
  REQUIRE(cli::cmd_train(opts) == cli::kExitNumericFailure);
}

TEST_CASE("eval matches training metrics and checks fingerprints", "[cli]") {
  const fs::path work = temp_dir("eval");
  const fs::path data = sbm_dataset(work / "data");
  const fs::path config = write_config(work, kFastConfig);

  cli::TrainOptions train_opts;
  train_opts.dataset_dir = data.string();
  train_opts.config_file = config.string();
  train_opts.out_dir = (work / "run").string();
  REQUIRE(cli::cmd_train(train_opts) == cli::kExitOk);
  const fs::path checkpoint = work / "run" / "checkpoint.json";

  // Reported test accuracy must agree with the metrics table.
  const Checkpoint cp = load_checkpoint(checkpoint);
  const Dataset ds = load_dataset(data);
  const double test_acc = evaluate(cp.params, ds, ds.test_mask, cp.config);
  const std::string metrics = slurp(work / "run" / "metrics.tsv");
  char expected[32];
  std::snprintf(expected, sizeof(expected), "%.6f", test_acc);
  REQUIRE(metrics.find(expected) != std::string::npos);

  cli::EvalOptions eval_opts;
  eval_opts.checkpoint_file = checkpoint.string();
  eval_opts.dataset_dir = data.string();
  REQUIRE(cli::cmd_eval(eval_opts) == cli::kExitOk);

  // A different dataset fails the fingerprint gate unless forced.
  const fs::path other = sbm_dataset(work / "other");
  save_dataset(generate_sbm(80, 2, 0.2, 0.04, 6, 2.0, 18), other);
  eval_opts.dataset_dir = other.string();
  REQUIRE(cli::cmd_eval(eval_opts) == cli::kExitInputError);
  eval_opts.force = true;
  REQUIRE(cli::cmd_eval(eval_opts) == cli::kExitOk);
}

TEST_CASE("attention ratio artifacts", "[cli]") {
  const fs::path work = temp_dir("ratio");
  const fs::path data = sbm_dataset(work / "data");

  // Craft a checkpoint with zero attention vectors: every per-node ratio is
  // exactly one.
  TrainConfig config;
  config.gsan.heads = 2;
  config.gsan.head_dim = 4;
  config.row_normalize = false;
  const Dataset ds = load_dataset(data);
  Rng rng(5);
  ModelParams params = init_params(ds.features.cols(),
                                   static_cast<std::size_t>(ds.num_classes()), config, rng);
  for (HeadParams& head : params.gsan.heads)
    head.attn->value = Matrix(head.attn->value.rows(), 1, 0.0);
  const fs::path checkpoint = work / "crafted.json";
  save_checkpoint(checkpoint, params, config, dataset_fingerprint(ds));

  cli::AttnRatioOptions opts;
  opts.checkpoint_file = checkpoint.string();
  opts.dataset_dir = data.string();
  opts.out_file = (work / "ratio.tsv").string();
  REQUIRE(cli::cmd_attn_ratio(opts) == cli::kExitOk);

  // Per-node file has one row per node, all exactly 1.
  std::ifstream in(work / "ratio.tsv");
  std::string header;
  std::getline(in, header);
  REQUIRE(header == "node\tratio");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    REQUIRE(line.substr(line.find('\t') + 1) == "1");
    ++rows;
  }
  REQUIRE(rows == static_cast<std::size_t>(ds.node_count()));

  // Histogram: 40 bins, all mass in the bin containing ratio 1.
  std::ifstream hist(work / "ratio_hist.tsv");
  std::getline(hist, header);
  std::size_t bins = 0, populated = 0, total = 0;
  while (std::getline(hist, line)) {
    if (line.empty()) continue;
    ++bins;
    const std::size_t count = std::stoull(line.substr(line.rfind('\t') + 1));
    if (count > 0) ++populated;
    total += count;
  }
  REQUIRE(bins == 40);
  REQUIRE(populated == 1);
  REQUIRE(total == static_cast<std::size_t>(ds.node_count()));
}

TEST_CASE("train leaves the dataset directory untouched", "[cli]") {
  const fs::path work = temp_dir("immutable");
  const fs::path data = sbm_dataset(work / "data");
  std::vector<std::pair<fs::path, std::string>> before;
  for (const auto& entry : fs::directory_iterator(data))
    before.emplace_back(entry.path(), slurp(entry.path()));
  cli::TrainOptions opts;
  opts.dataset_dir = data.string();
  opts.config_file = write_config(work, kFastConfig).string();
  opts.out_dir = (work / "out").string();
  REQUIRE(cli::cmd_train(opts) == cli::kExitOk);
  for (const auto& [path, content] : before) REQUIRE(slurp(path) == content);
}

TEST_CASE("attention ratio requires a gsan checkpoint", "[cli]") {
  const fs::path work = temp_dir("gcnratio");
  const fs::path data = sbm_dataset(work / "data");
  const fs::path config = write_config(work, kFastConfig + "model = gcn\n");
  cli::TrainOptions train_opts;
  train_opts.dataset_dir = data.string();
  train_opts.config_file = config.string();
  train_opts.out_dir = (work / "run").string();
  REQUIRE(cli::cmd_train(train_opts) == cli::kExitOk);

  cli::AttnRatioOptions opts;
  opts.checkpoint_file = (work / "run" / "checkpoint.json").string();
  opts.dataset_dir = data.string();
  opts.out_file = (work / "ratio.tsv").string();
  REQUIRE(cli::cmd_attn_ratio(opts) == cli::kExitInputError);
}

TEST_CASE("gradcheck exit codes", "[cli]") {
  cli::GradcheckOptions opts;
  REQUIRE(cli::cmd_gradcheck(opts) == cli::kExitOk);
  opts.corrupt = true;
  REQUIRE(cli::cmd_gradcheck(opts) == cli::kExitGradcheckFailure);
}

TEST_CASE("dataset info and synth", "[cli]") {
  const fs::path work = temp_dir("dataset");
  cli::DatasetSynthOptions synth;
  synth.out_dir = (work / "synth").string();
  synth.nodes = 60;
  synth.classes = 3;
  synth.p_in = 0.2;
  synth.p_out = 0.0;
  synth.seed = 23;
  REQUIRE(cli::cmd_dataset_synth(synth) == cli::kExitOk);

  cli::DatasetInfoOptions info;
  info.dataset_dir = synth.out_dir;
  REQUIRE(cli::cmd_dataset_info(info) == cli::kExitOk);

  // p_out = 0 means every edge joins a single class.
  const Dataset ds = load_dataset(synth.out_dir);
  REQUIRE(edge_homophily(ds) == 1.0);

  info.dataset_dir = (work / "nowhere").string();
  REQUIRE(cli::cmd_dataset_info(info) == cli::kExitInputError);
}

TEST_CASE("toy fixture trains through the CLI", "[cli]") {
  const fs::path work = temp_dir("toy");
  const fs::path config = write_config(
      work, "max_epochs = 80\npatience = 80\ndropout = 0.0\nheads = 2\nhead_dim = 4\n");
  cli::TrainOptions opts;
  opts.dataset_dir = (kFixtures / "toy").string();
  opts.config_file = config.string();
  opts.out_dir = (work / "out").string();
  REQUIRE(cli::cmd_train(opts) == cli::kExitOk);
  REQUIRE(fs::exists(work / "out" / "checkpoint.json"));
}

TEST_CASE("grid training writes the sweep table", "[cli]") {
  const fs::path work = temp_dir("grid");
  const fs::path data = sbm_dataset(work / "data");
  const fs::path config = write_config(work, kFastConfig);
  const fs::path grid = work / "grid.txt";
  {
    std::ofstream out(grid, std::ios::binary);
    out << "heads = 1,2\nresidual_alpha = 0.5\nhead_dim = 4\n";
  }
  cli::TrainOptions opts;
  opts.dataset_dir = data.string();
  opts.config_file = config.string();
  opts.grid_file = grid.string();
  opts.out_dir = (work / "out").string();
  REQUIRE(cli::cmd_train(opts) == cli::kExitOk);
  const std::string table = slurp(work / "out" / "grid.tsv");
  // Header plus one row per grid point.
  REQUIRE(std::count(table.begin(), table.end(), '\n') == 3);
}

TEST_CASE("multi-seed training reports mean and spread", "[cli]") {
  const fs::path work = temp_dir("seeds");
  const fs::path data = sbm_dataset(work / "data");
  const fs::path config = write_config(work, kFastConfig);
  cli::TrainOptions opts;
  opts.dataset_dir = data.string();
  opts.config_file = config.string();
  opts.num_seeds = 3;
  opts.out_dir = (work / "out").string();
  REQUIRE(cli::cmd_train(opts) == cli::kExitOk);
  const std::string metrics = slurp(work / "out" / "metrics.tsv");
  REQUIRE(metrics.find("mean_test_acc") != std::string::npos);
  // Header + three seed rows + aggregate line.
  REQUIRE(std::count(metrics.begin(), metrics.end(), '\n') == 5);
}
