#pragma once

// Training datasets (2-D spiral, Gaussian mixtures), deterministic
// shuffled minibatching, and CSV import/export of point sets.

#include <cstdint>
#include <string>
#include <vector>

#include "somix/oracles.hpp"
#include "somix/rng.hpp"

namespace somix::data {

struct Dataset {
  std::size_t dim = 0;
  std::vector<double> train;    // row-major, train_rows x dim
  std::vector<double> holdout;  // row-major, holdout_rows x dim

  std::size_t train_rows() const { return dim ? train.size() / dim : 0; }
  std::size_t holdout_rows() const { return dim ? holdout.size() / dim : 0; }
};

// Normalization that puts the clean spiral at unit root-mean-square radius.
double swiss_roll_scale();
// Point on the clean curve at parameter t: t * (cos t, sin t) / scale.
void swiss_roll_point(double t, double* out2);

// t ~ U(3pi/2, 9pi/2), plus isotropic N(0, noise_std^2) on the scaled point.
// The last floor(n * holdout_fraction) rows generated become the holdout.
Dataset swiss_roll(std::size_t n, double noise_std, double holdout_fraction, std::uint64_t seed);

Dataset gmm_dataset(const oracles::GaussianMixture& gm, std::size_t n, double holdout_fraction,
                    std::uint64_t seed);

// Fisher-Yates reshuffle at every epoch from an owned generator; batches are
// consecutive permutation slices; a trailing slice shorter than batch_size is
// dropped. State round-trips through (rng state at epoch start, cursor).
class BatchIterator {
 public:
  BatchIterator(const Dataset& ds, std::size_t batch_size, std::uint64_t seed);

  std::size_t batch_size() const { return bs_; }
  std::size_t dim() const { return ds_->dim; }

  // Copies the next batch into out (batch_size x dim, row-major).
  void next(double* out);

  struct State {
    std::string rng_epoch_start;
    std::size_t cursor = 0;
  };
  State state() const;
  void restore(const State& s);

 private:
  const Dataset* ds_;
  std::size_t bs_;
  Rng rng_;
  std::string epoch_start_;
  std::vector<std::size_t> perm_;
  std::size_t cursor_ = 0;

  void reshuffle();
};

// Header "x0,x1,...", one row per line, %.17g fields.
void write_csv(const std::string& path, const double* rows, std::size_t n, std::size_t dim);
// Returns row-major data; dim from the header.
std::vector<double> read_csv(const std::string& path, std::size_t& dim_out);

}  // namespace somix::data
