#pragma once

// Training orchestration: warmup, alternating generator/score updates with
// score sub-iterations, skip-and-count handling of non-finite steps,
// checkpointing that replays bit-exactly, and per-step JSONL metrics.

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "somix/adamw.hpp"
#include "somix/checkpoint.hpp"
#include "somix/config.hpp"
#include "somix/data.hpp"
#include "somix/distill.hpp"
#include "somix/nets.hpp"
#include "somix/objectives.hpp"

namespace somix {

struct StepReport {
  std::size_t step = 0;
  double loss_score = 0.0;
  double loss_gen_surrogate = 0.0;
  double loss_gan_gen = 0.0;
  double loss_gan_disc = 0.0;
  double grad_norm_gen = 0.0;
  double grad_norm_score = 0.0;
  double alpha = 0.0;
  double sigma = 0.0;
  double w_alpha = 1.0;
  double w_dmd = 1.0;
  double wall_ms = 0.0;
  std::size_t gen_updates = 0;
  std::size_t score_updates = 0;
  bool skipped = false;
};

struct TrainingAborted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  // Warmup (once) + outer steps until config().total_steps, with periodic and
  // final checkpoints and per-step metrics.
  void run(std::ostream* progress = nullptr);

  StepReport step();                          // one outer iteration
  void warmup(std::ostream* progress = nullptr);
  bool warmup_done() const { return warmup_done_; }

  void save_checkpoint(const std::string& path);
  static Trainer from_checkpoint(const std::string& path);

  std::vector<double> sample(std::size_t n, Rng& rng) const;

  const TrainConfig& config() const { return cfg_; }
  std::size_t step_count() const { return step_; }
  double resolved_sigma_data() const { return sigma_data_; }
  const data::Dataset& dataset() const { return *dataset_; }
  nets::GeneratorNet& generator();
  nets::AmortizedScoreNet& score_net();
  distill::ExplicitScoreBundle& bundle();
  std::uint64_t skipped_steps() const { return skipped_total_; }

  // Every persistent array (net params + fixed embeddings), for tests that
  // compare two trainers bit-exactly.
  std::vector<nets::Param> all_params();

 private:
  TrainConfig cfg_;
  std::unique_ptr<data::Dataset> dataset_;
  std::optional<data::BatchIterator> iter_;
  double sigma_data_ = 0.0;

  std::optional<nets::GeneratorNet> gen_;
  std::optional<nets::AmortizedScoreNet> score_;      // smt / pretrain_teacher
  std::optional<distill::ExplicitScoreBundle> bundle_; // smd
  std::optional<AdamW> opt_gen_, opt_score_;
  Rng rng_train_{0};

  std::size_t step_ = 0;
  bool warmup_done_ = false;
  std::uint64_t consecutive_skips_ = 0;
  std::uint64_t skipped_total_ = 0;
  std::unique_ptr<std::ofstream> metrics_;

  bool has_generator() const { return cfg_.mode != "pretrain_teacher"; }
  bool is_smd() const { return cfg_.mode == "smd"; }

  ad::Tensor next_real_batch();
  std::vector<double> draw_alpha_generator(std::size_t n);
  std::vector<double> draw_alpha_score(std::size_t n);
  std::vector<double> draw_sigma(std::size_t n);
  StepReport smt_like_step();
  StepReport pretrain_step();
  void write_metrics(const StepReport& r);
  void note_skip(bool any_skip);
};

// Rebuilds the frozen score model saved by a pretrain_teacher run. The
// optional out-params report the sigma range the teacher was trained on.
std::shared_ptr<distill::TeacherScore> load_teacher_checkpoint(const std::string& path,
                                                               double* sigma_min_out = nullptr,
                                                               double* sigma_max_out = nullptr);

// Deterministic seed derivation for sub-streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace somix
