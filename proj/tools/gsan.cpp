// Command-line front end: training, evaluation, gradient verification,
// dataset tooling and the band-pass/low-pass attention analysis.

#include <cstdint>
#include <string>

#include "CLI11.hpp"

#include "gsan/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gsan - geometric scattering attention networks for node classification"};
  app.require_subcommand(1);

  gsan::cli::TrainOptions train_opts;
  std::uint64_t seed_override = 0;
  CLI::App* train = app.add_subcommand("train", "train a model and write run artifacts");
  train->add_option("--dataset", train_opts.dataset_dir, "dataset directory")->required();
  train->add_option("--config", train_opts.config_file, "config file (key = value lines)");
  train->add_option("--out", train_opts.out_dir, "output directory (default: out)");
  CLI::Option* train_seed = train->add_option("--seed", seed_override, "override the config seed");
  train->add_option("--grid", train_opts.grid_file, "grid file; runs a hyperparameter sweep");
  train->add_option("--seeds", train_opts.num_seeds,
                    "run this many consecutive seeds and report mean/stddev");

  gsan::cli::EvalOptions eval_opts;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval->add_option("checkpoint", eval_opts.checkpoint_file, "checkpoint file")->required();
  eval->add_option("--dataset", eval_opts.dataset_dir, "dataset directory")->required();
  eval->add_flag("--force", eval_opts.force, "ignore dataset fingerprint mismatch");
  eval->add_option("--out", eval_opts.out_dir, "write a run manifest to this directory");

  gsan::cli::AttnRatioOptions ratio_opts;
  CLI::App* ratio = app.add_subcommand(
      "attn-ratio", "per-node band-pass vs low-pass attention ratios and histogram");
  ratio->add_option("checkpoint", ratio_opts.checkpoint_file, "checkpoint file")->required();
  ratio->add_option("--dataset", ratio_opts.dataset_dir, "dataset directory")->required();
  ratio->add_option("--out", ratio_opts.out_file, "per-node ratio output file");
  ratio->add_flag("--force", ratio_opts.force, "ignore dataset fingerprint mismatch");

  gsan::cli::GradcheckOptions grad_opts;
  CLI::App* grad = app.add_subcommand(
      "gradcheck", "verify analytic gradients against central finite differences");
  grad->add_option("--config", grad_opts.config_file, "config file (dropout is forced off)");
  grad->add_flag("--corrupt-backward", grad_opts.corrupt,
                 "self-test hook: corrupt one gradient entry so the check must fail")
      ->group("");

  CLI::App* dataset = app.add_subcommand("dataset", "dataset tooling");
  dataset->require_subcommand(1);

  gsan::cli::DatasetInfoOptions info_opts;
  CLI::App* info = dataset->add_subcommand("info", "print dataset statistics");
  info->add_option("--dataset", info_opts.dataset_dir, "dataset directory")->required();

  gsan::cli::DatasetSynthOptions synth_opts;
  CLI::App* synth =
      dataset->add_subcommand("synth", "generate a stochastic block model dataset");
  synth->add_option("--out", synth_opts.out_dir, "output directory")->required();
  synth->add_option("--nodes", synth_opts.nodes, "node count");
  synth->add_option("--classes", synth_opts.classes, "class count");
  synth->add_option("--p-in", synth_opts.p_in, "intra-class edge probability");
  synth->add_option("--p-out", synth_opts.p_out, "inter-class edge probability");
  synth->add_option("--features", synth_opts.features, "feature dimension");
  synth->add_option("--signal", synth_opts.signal, "class mean shift strength");
  synth->add_option("--seed", synth_opts.seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) {
    if (train_seed->count() > 0) train_opts.seed = seed_override;
    return gsan::cli::cmd_train(train_opts);
  }
  if (eval->parsed()) return gsan::cli::cmd_eval(eval_opts);
  if (ratio->parsed()) return gsan::cli::cmd_attn_ratio(ratio_opts);
  if (grad->parsed()) return gsan::cli::cmd_gradcheck(grad_opts);
  if (dataset->parsed()) {
    if (info->parsed()) return gsan::cli::cmd_dataset_info(info_opts);
    if (synth->parsed()) return gsan::cli::cmd_dataset_synth(synth_opts);
  }
  return gsan::cli::kExitInputError;
}
