// Command-line front end: training, sampling, evaluation, verification,
// and plotting. Exit codes: 0 ok, 2 bad usage or bad config, 3 IO failure,
// 4 verification or numeric failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "somix/autodiff.hpp"
#include "somix/config.hpp"
#include "somix/data.hpp"
#include "somix/metrics.hpp"
#include "somix/oracles.hpp"
#include "somix/plot.hpp"
#include "somix/rng.hpp"
#include "somix/trainer.hpp"
#include "somix/verify.hpp"

namespace {

using namespace somix;

int run_training(const std::string& config_path, const std::string& mode,
                 const std::string& teacher_path) {
  TrainConfig cfg = TrainConfig::from_file(config_path);
  cfg.mode = mode;  // the subcommand decides the variant
  if (!teacher_path.empty()) {
    cfg.teacher.kind = "checkpoint";
    cfg.teacher.path = teacher_path;
  }
  cfg.validate();
  Trainer tr(cfg);
  tr.run(&std::cout);
  std::cout << "done: " << tr.step_count() << " steps";
  if (!cfg.checkpoint_path.empty()) std::cout << ", checkpoint at " << cfg.checkpoint_path;
  std::cout << "\n";
  return 0;
}

data::Dataset dataset_from_config(const DataConfig& dc) {
  if (dc.name == "swiss_roll")
    return data::swiss_roll(dc.n, dc.noise_std, dc.holdout_fraction, dc.seed);
  oracles::GaussianMixture gm(dc.gmm_weights, dc.gmm_means, dc.gmm_variances);
  return data::gmm_dataset(gm, dc.n, dc.holdout_fraction, dc.seed);
}

int run_sample(const std::string& checkpoint_path, std::size_t n, const std::string& out_path,
               std::uint64_t seed) {
  Trainer tr = Trainer::from_checkpoint(checkpoint_path);
  if (tr.config().mode == "pretrain_teacher") {
    std::cerr << "somix sample: checkpoint holds a score model, not a generator\n";
    return 2;
  }
  Rng rng(seed);
  const auto s = tr.sample(n, rng);
  data::write_csv(out_path, s.data(), n, tr.dataset().dim);
  std::cout << "wrote " << n << " samples to " << out_path << "\n";
  return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& dataset_spec,
             const std::string& out_path, std::size_t n, std::uint64_t seed) {
  Trainer tr = Trainer::from_checkpoint(checkpoint_path);
  if (tr.config().mode == "pretrain_teacher") {
    std::cerr << "somix eval: checkpoint holds a score model, not a generator\n";
    return 2;
  }
  TrainConfig spec = TrainConfig::from_file(dataset_spec);
  const data::Dataset ds = dataset_from_config(spec.data);
  const bool use_holdout = ds.holdout_rows() > 0;
  const double* ref = use_holdout ? ds.holdout.data() : ds.train.data();
  const std::size_t nref = use_holdout ? ds.holdout_rows() : ds.train_rows();
  if (ds.dim != tr.dataset().dim) {
    std::cerr << "somix eval: dataset dimension " << ds.dim
              << " does not match the generator's " << tr.dataset().dim << "\n";
    return 2;
  }
  Rng rng(seed);
  const auto gen = tr.sample(n, rng);
  const auto rep = metrics::evaluate(gen.data(), n, ref, nref, ds.dim);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("eval: cannot open " + out_path);
  out << rep.to_json().dump(2) << "\n";
  std::cout << rep.to_json().dump(2) << "\n";
  return 0;
}

int run_verify(const std::vector<int>& only, const std::string& work_dir, std::size_t c8_steps,
               std::size_t c9_max, std::size_t c10_max, std::size_t c11_steps) {
  verify::Options vo;
  vo.only = only;
  vo.work_dir = work_dir;
  vo.progress = &std::cout;
  vo.c8_steps = c8_steps;
  vo.c9_max_steps = c9_max;
  vo.c10_max_steps = c10_max;
  vo.c11_steps = c11_steps;
  const auto results = verify::run_checks(vo);
  bool all = true;
  for (const auto& r : results) all = all && r.pass;
  std::cout << (all ? "verify: all checks passed" : "verify: FAILURES present") << "\n";
  return all ? 0 : 4;
}

int run_plot(const std::string& samples_path, const std::string& reference_path,
             const std::string& out_path) {
  std::size_t dim = 0;
  const auto samples = data::read_csv(samples_path, dim);
  if (dim != 2) {
    std::cerr << "somix plot: samples must be 2-D, got dim " << dim << "\n";
    return 2;
  }
  std::vector<double> ref;
  std::size_t nref = 0;
  if (!reference_path.empty()) {
    std::size_t rdim = 0;
    ref = data::read_csv(reference_path, rdim);
    if (rdim != 2) {
      std::cerr << "somix plot: reference must be 2-D, got dim " << rdim << "\n";
      return 2;
    }
    nref = ref.size() / 2;
  }
  plot::emit_scatter_svg(out_path, samples.data(), samples.size() / 2,
                         nref ? ref.data() : nullptr, nref);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixture-score matching trainer for 2-D toy distributions"};
  app.require_subcommand(1);

  std::string config_path, teacher_path, checkpoint_path, out_path, samples_path;
  std::string reference_path, dataset_spec, work_dir = "verify_work";
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  std::vector<int> only;
  std::size_t c8_steps = 6000, c9_max = 50000, c10_max = 30000, c11_steps = 3000;

  auto* train = app.add_subcommand("train", "train generator + amortized mixture score");
  train->add_option("--config", config_path, "config file")->required();

  auto* distill = app.add_subcommand("distill", "train generator against a frozen teacher");
  distill->add_option("--config", config_path, "config file")->required();
  distill->add_option("--teacher", teacher_path,
                      "teacher checkpoint (overrides the config's teacher section)");

  auto* pretrain =
      app.add_subcommand("pretrain-teacher", "pretrain a plain denoising score model");
  pretrain->add_option("--config", config_path, "config file")->required();

  auto* sample = app.add_subcommand("sample", "draw generator samples to CSV");
  sample->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
  sample->add_option("--n", n, "number of samples");
  sample->add_option("--out", out_path, "output CSV")->required();
  sample->add_option("--seed", seed, "sampling seed");

  auto* eval = app.add_subcommand("eval", "score generator samples against a dataset");
  eval->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
  eval->add_option("--dataset-spec", dataset_spec, "config file naming the reference dataset")
      ->required();
  eval->add_option("--out", out_path, "output JSON")->required();
  eval->add_option("--n", n, "number of generated samples");
  eval->add_option("--seed", seed, "sampling seed");

  auto* verify_cmd = app.add_subcommand("verify", "run the oracle and property suite");
  verify_cmd->add_option("--only", only, "criterion ids (default: all)");
  verify_cmd->add_option("--work-dir", work_dir, "scratch directory");
  verify_cmd->add_option("--distill-steps", c8_steps, "budget for the distillation check");
  verify_cmd->add_option("--spiral-max-steps", c9_max, "budget for the spiral run");
  verify_cmd->add_option("--gmm-max-steps", c10_max, "budget for the mixture run");
  verify_cmd->add_option("--ablation-steps", c11_steps, "budget per ablation run");

  auto* plot_cmd = app.add_subcommand("plot", "scatter SVG from sample CSVs");
  plot_cmd->add_option("--samples", samples_path, "samples CSV")->required();
  plot_cmd->add_option("--reference", reference_path, "optional reference CSV");
  plot_cmd->add_option("--out", out_path, "output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(train)) return run_training(config_path, "smt", "");
    if (app.got_subcommand(distill)) return run_training(config_path, "smd", teacher_path);
    if (app.got_subcommand(pretrain))
      return run_training(config_path, "pretrain_teacher", "");
    if (app.got_subcommand(sample)) return run_sample(checkpoint_path, n, out_path, seed);
    if (app.got_subcommand(eval))
      return run_eval(checkpoint_path, dataset_spec, out_path, n, seed);
    if (app.got_subcommand(verify_cmd))
      return run_verify(only, work_dir, c8_steps, c9_max, c10_max, c11_steps);
    if (app.got_subcommand(plot_cmd)) return run_plot(samples_path, reference_path, out_path);
  } catch (const TrainingAborted& e) {
    std::cerr << "somix: " << e.what() << "\n";
    return 4;
  } catch (const ad::NumericError& e) {
    std::cerr << "somix: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "somix: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "somix: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
