#include "somix/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace somix::data {

namespace {
constexpr double pi = 3.14159265358979323846;
constexpr double t_lo = 1.5 * pi;
constexpr double t_hi = 4.5 * pi;

Dataset split_holdout(std::vector<double> rows, std::size_t dim, double holdout_fraction) {
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
    throw std::invalid_argument("holdout_fraction must be in [0,1)");
  const std::size_t n = rows.size() / dim;
  const std::size_t n_hold = static_cast<std::size_t>(std::floor(holdout_fraction * n));
  Dataset ds;
  ds.dim = dim;
  ds.holdout.assign(rows.end() - n_hold * dim, rows.end());
  rows.resize((n - n_hold) * dim);
  ds.train = std::move(rows);
  if (ds.train.empty()) throw std::invalid_argument("dataset: empty training split");
  return ds;
}
}  // namespace

double swiss_roll_scale() {
  // E[t^2] for t ~ U(a,b) is (a^2+ab+b^2)/3; dividing by its square root
  // makes E[|point|^2] = 1.
  return std::sqrt((t_lo * t_lo + t_lo * t_hi + t_hi * t_hi) / 3.0);
}

void swiss_roll_point(double t, double* out2) {
  const double s = swiss_roll_scale();
  out2[0] = t * std::cos(t) / s;
  out2[1] = t * std::sin(t) / s;
}

Dataset swiss_roll(std::size_t n, double noise_std, double holdout_fraction, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("swiss_roll: n must be positive");
  if (noise_std < 0.0) throw std::invalid_argument("swiss_roll: noise_std must be nonnegative");
  Rng rng(seed);
  std::vector<double> rows(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = rng.uniform(t_lo, t_hi);
    swiss_roll_point(t, &rows[i * 2]);
    rows[i * 2] += noise_std * rng.normal();
    rows[i * 2 + 1] += noise_std * rng.normal();
  }
  return split_holdout(std::move(rows), 2, holdout_fraction);
}

Dataset gmm_dataset(const oracles::GaussianMixture& gm, std::size_t n, double holdout_fraction,
                    std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("gmm_dataset: n must be positive");
  Rng rng(seed);
  std::vector<double> rows(n * gm.dim());
  oracles::sample_n(gm, rng, n, rows.data());
  return split_holdout(std::move(rows), gm.dim(), holdout_fraction);
}

BatchIterator::BatchIterator(const Dataset& ds, std::size_t batch_size, std::uint64_t seed)
    : ds_(&ds), bs_(batch_size), rng_(seed) {
  if (batch_size == 0 || batch_size > ds.train_rows())
    throw std::invalid_argument("BatchIterator: batch_size must be in [1, train_rows]");
  perm_.resize(ds.train_rows());
  reshuffle();
}

void BatchIterator::reshuffle() {
  epoch_start_ = rng_.save_state();
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  for (std::size_t i = perm_.size() - 1; i > 0; --i) {
    const std::size_t j = rng_.index(i + 1);
    std::swap(perm_[i], perm_[j]);
  }
  cursor_ = 0;
}

void BatchIterator::next(double* out) {
  if (cursor_ + bs_ > perm_.size()) reshuffle();
  const std::size_t d = ds_->dim;
  for (std::size_t i = 0; i < bs_; ++i) {
    const double* src = ds_->train.data() + perm_[cursor_ + i] * d;
    std::copy(src, src + d, out + i * d);
  }
  cursor_ += bs_;
}

BatchIterator::State BatchIterator::state() const { return {epoch_start_, cursor_}; }

void BatchIterator::restore(const State& s) {
  rng_.load_state(s.rng_epoch_start);
  reshuffle();  // replays the epoch's permutation, leaves rng at post-shuffle state
  cursor_ = s.cursor;
}

void write_csv(const std::string& path, const double* rows, std::size_t n, std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("write_csv: dim must be positive");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_csv: cannot open " + path);
  for (std::size_t j = 0; j < dim; ++j) std::fprintf(f, j ? ",x%zu" : "x%zu", j);
  std::fputc('\n', f);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j)
      std::fprintf(f, j ? ",%.17g" : "%.17g", rows[i * dim + j]);
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("write_csv: close failed for " + path);
}

std::vector<double> read_csv(const std::string& path, std::size_t& dim_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_csv: missing header in " + path);
  dim_out = 1 + static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  std::vector<double> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::size_t got = 0;
    while (std::getline(ls, field, ',')) {
      // strtod instead of stod: stod throws on ERANGE, which glibc raises even
      // for representable subnormals. Underflowed-but-finite values are valid.
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0' || !std::isfinite(v))
        throw std::runtime_error("read_csv: bad number at " + path + ":" +
                                 std::to_string(lineno));
      rows.push_back(v);
      ++got;
    }
    if (got != dim_out)
      throw std::runtime_error("read_csv: ragged row at " + path + ":" + std::to_string(lineno));
  }
  return rows;
}

}  // namespace somix::data
