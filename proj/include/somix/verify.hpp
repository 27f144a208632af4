#pragma once

// The acceptance checks: closed-form identities against oracles, gradient
// checks against finite differences, population-level recovery on tabulated
// problems, and the end-to-end training runs with their metric thresholds.
// Each check reports pass/fail plus the measured numbers.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace somix::verify {

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;  // measured values and thresholds
  double seconds = 0.0;
};

struct Options {
  std::vector<int> only;               // empty = all checks
  std::string work_dir = "verify_work";  // scratch dir for checkpoints/metrics
  std::ostream* progress = nullptr;

  // Budgets for the training-based checks. The ceilings come from the check
  // definitions; training stops early once the thresholds are met.
  std::size_t c8_steps = 20000;
  std::size_t c9_max_steps = 50000;
  std::size_t c9_eval_every = 1000;
  std::size_t c10_max_steps = 30000;
  std::size_t c10_eval_every = 1000;
  std::size_t c11_steps = 3000;
};

inline constexpr int num_checks = 12;

// id in [1, num_checks].
CheckResult run_check(int id, const Options& opts);

// Runs opts.only (or all) in id order.
std::vector<CheckResult> run_checks(const Options& opts);

}  // namespace somix::verify
