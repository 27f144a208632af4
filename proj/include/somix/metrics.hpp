#pragma once

// Two-sample discrepancy metrics for point clouds: energy distance, sliced
// Wasserstein, and neighborhood coverage/adherence fractions. All results are
// deterministic for a fixed seed regardless of thread count (per-row partials
// combined in index order).

#include <cstdint>
#include <vector>

#include <json.hpp>

namespace somix::metrics {

// 2 mean||a-b|| - mean||a-a'|| - mean||b-b'|| over all (ordered) pairs
// including the diagonal, so identical sets give exactly 0.
double energy_distance(const double* a, std::size_t n, const double* b, std::size_t m,
                       std::size_t dim);

// Exact W1 between two 1-D empirical distributions (possibly different
// sizes); sorts copies internally.
double wasserstein1_1d(std::vector<double> a, std::vector<double> b);

// Mean over n_projections random unit directions (seeded Gaussian draws,
// normalized) of the exact projected 1-D W1.
double sliced_wasserstein(const double* a, std::size_t n, const double* b, std::size_t m,
                          std::size_t dim, std::size_t n_projections, std::uint64_t seed);

// Median over points of the distance to the nearest other point. n >= 2.
double median_nn_spacing(const double* x, std::size_t n, std::size_t dim);

// Fraction of rows of a that lie within delta of some row of b.
double fraction_within(const double* a, std::size_t na, const double* b, std::size_t nb,
                       std::size_t dim, double delta);

struct EvalReport {
  double energy = 0.0;
  double sliced_w = 0.0;
  double coverage = 0.0;   // fraction of reference points near a generated one
  double adherence = 0.0;  // fraction of generated points near a reference one
  double delta = 0.0;      // neighborhood radius actually used
  double baseline_energy = -1.0;  // real-vs-real reference value; < 0 = not computed
  std::size_t n_generated = 0;
  std::size_t n_reference = 0;
  std::size_t n_projections = 0;
  std::uint64_t projection_seed = 0;

  nlohmann::json to_json() const;
};

// delta = 3 x median nearest-neighbor spacing of the reference set.
EvalReport evaluate(const double* generated, std::size_t n_gen, const double* reference,
                    std::size_t n_ref, std::size_t dim, std::size_t n_projections = 128,
                    std::uint64_t seed = 0);

}  // namespace somix::metrics
