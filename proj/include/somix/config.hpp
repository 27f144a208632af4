#pragma once

// Run configuration: parsed from a flat-sectioned key = value text file,
// serialized to/from JSON for checkpoint headers.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "somix/schedules.hpp"

namespace somix {

struct DataConfig {
  std::string name = "swiss_roll";  // swiss_roll | gmm
  std::size_t n = 20000;
  double noise_std = 0.05;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 7;
  // gmm datasets
  std::vector<double> gmm_weights;
  std::vector<std::vector<double>> gmm_means;
  std::vector<double> gmm_variances;
};

struct TeacherConfig {
  std::string kind = "analytic";  // analytic | checkpoint
  std::string path;
  // analytic teacher; falls back to the data mixture when empty
  std::vector<double> gmm_weights;
  std::vector<std::vector<double>> gmm_means;
  std::vector<double> gmm_variances;
};

struct NetConfig {
  std::vector<std::size_t> hidden = {128, 128};
  std::string activation;  // set per net in defaults
  std::size_t latent_dim = 0;  // generator only; 0 = data_dim
  std::size_t alpha_embed_dim = 64;
  std::size_t noise_embed_dim = 64;
  double fourier_scale = 16.0;
  std::vector<std::size_t> disc_hidden = {64};
};

struct TrainConfig {
  // [train]
  std::string mode = "smt";  // smt | smd | pretrain_teacher
  std::uint64_t seed = 1;
  std::size_t total_steps = 1000;
  std::size_t warmup_steps = 0;
  std::size_t batch_size = 256;
  double lr_gen = 1e-5;
  double lr_score = 1e-4;
  double lr_warmup = 1e-4;
  std::size_t score_subiters = 5;
  double lambda_gan = 1e-2;
  double mu_disc = 1.0;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_eps = 1e-8;      // guard inside adaptive weights
  bool use_w_alpha = true;
  bool use_w_dmd = true;
  bool per_sample_draws = false;
  bool alpha_binary = false;     // restrict alpha draws to {0, 1}
  bool debug_checks = false;
  std::size_t skip_abort_limit = 50;
  std::string checkpoint_path = "checkpoint.somx";
  std::string metrics_path = "metrics.jsonl";
  std::size_t checkpoint_every = 0;  // 0 = final only

  // [schedule]
  NoiseSchedule schedule;
  double sigma_data = 0.0;  // <= 0: estimated from the training split

  // [alpha]
  AlphaSampler alpha_sampler;

  // [generator] / [score]
  NetConfig generator;
  NetConfig score;

  DataConfig data;
  TeacherConfig teacher;

  void validate() const;

  static TrainConfig from_file(const std::string& path);
  static TrainConfig from_string(const std::string& text);

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

}  // namespace somix
