#pragma once

// Deterministic random source. mt19937_64 has a standard-pinned output
// sequence, and every conversion to a distribution is spelled out here, so a
// given seed produces the same stream on any platform. <random>
// distributions are deliberately not used: their output is
// implementation-defined.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace somix {

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes exactly two engine draws.
  double normal() {
    const double u1 = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;        // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n), unbiased via rejection.
  std::size_t index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
    const std::uint64_t un = n;
    const std::uint64_t bound = (UINT64_MAX / un) * un;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= bound);
    return static_cast<std::size_t>(x % un);
  }

  void fill_normal(double* out, std::size_t n, double stddev = 1.0) {
    for (std::size_t i = 0; i < n; ++i) out[i] = stddev * normal();
  }

  void fill_uniform(double* out, std::size_t n, double lo = 0.0, double hi = 1.0) {
    for (std::size_t i = 0; i < n; ++i) out[i] = uniform(lo, hi);
  }

  std::string save_state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void load_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    if (is.fail()) throw std::runtime_error("Rng::load_state: malformed state string");
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace somix
