#pragma once

// AdamW with decoupled weight decay. Steps with any non-finite gradient are
// skipped wholesale (no state advances) and counted.

#include <cstdint>
#include <string>
#include <vector>

#include "somix/nets.hpp"

namespace somix {

class AdamW {
 public:
  struct Options {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
  };

  AdamW() = default;
  AdamW(std::vector<nets::Param> params, Options opts);

  // Applies one update from the accumulated gradients. Returns false (and
  // leaves parameters, moments, and the step counter untouched) if any
  // gradient entry is non-finite.
  bool step();
  void zero_grad();

  void set_lr(double lr) { opts_.lr = lr; }
  double lr() const { return opts_.lr; }
  std::uint64_t step_count() const { return t_; }
  std::uint64_t skipped_count() const { return skipped_; }

  // Global L2 norm of the current gradients.
  double grad_norm() const;

  // Moment buffers exposed for checkpointing, named "<param>.m" / "<param>.v".
  struct StateArray {
    std::string name;
    std::vector<double>* values;
  };
  std::vector<StateArray> state_arrays();
  std::uint64_t& step_counter() { return t_; }
  std::uint64_t& skipped_counter() { return skipped_; }

 private:
  std::vector<nets::Param> params_;
  std::vector<std::vector<double>> m_, v_;
  Options opts_;
  std::uint64_t t_ = 0;
  std::uint64_t skipped_ = 0;
};

}  // namespace somix
