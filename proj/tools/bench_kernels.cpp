// Times the serial kernel references against their OpenMP variants and
// checks that both produce bit-identical results.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <tuple>
#include <vector>

#include "somix/kernels.hpp"
#include "somix/rng.hpp"

using namespace somix;

namespace {

double time_ms(int reps, const std::function<void()>& fn) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> randn_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

int main() {
  Rng rng(42);
  std::printf("threads available: %d\n\n", kernels::max_threads());

  std::printf("%-28s %10s %10s %8s %s\n", "kernel", "serial ms", "openmp ms", "speedup",
              "identical");

  for (const auto [n, k, m] : {std::tuple<int, int, int>{256, 128, 128},
                               std::tuple<int, int, int>{1024, 256, 256},
                               std::tuple<int, int, int>{2048, 512, 512}}) {
    const auto a = randn_vec(static_cast<std::size_t>(n) * k, rng);
    const auto b = randn_vec(static_cast<std::size_t>(k) * m, rng);
    std::vector<double> cs(static_cast<std::size_t>(n) * m), cp(cs.size());
    const double ts =
        time_ms(3, [&] { kernels::mm_serial(a.data(), false, b.data(), false, cs.data(),
                                            n, k, m, false); });
    const double tp =
        time_ms(3, [&] { kernels::mm_parallel(a.data(), false, b.data(), false, cp.data(),
                                              n, k, m, false); });
    const bool same = std::memcmp(cs.data(), cp.data(), cs.size() * sizeof(double)) == 0;
    char label[64];
    std::snprintf(label, sizeof(label), "matmul %dx%dx%d", n, k, m);
    std::printf("%-28s %10.3f %10.3f %8.2fx %s\n", label, ts, tp, ts / tp,
                same ? "yes" : "NO");
  }

  for (const std::size_t n : {std::size_t{1} << 20, std::size_t{1} << 23}) {
    const auto x = randn_vec(n, rng);
    double rs = 0.0, rp = 0.0;
    const double ts = time_ms(5, [&] { rs = kernels::reduce_sum_serial(x.data(), n); });
    const double tp = time_ms(5, [&] { rp = kernels::reduce_sum_parallel(x.data(), n); });
    char label[64];
    std::snprintf(label, sizeof(label), "reduce_sum n=%zu", n);
    std::printf("%-28s %10.3f %10.3f %8.2fx %s\n", label, ts, tp, ts / tp,
                rs == rp ? "yes" : "NO");
  }

  {
    const std::size_t n = std::size_t{1} << 22;
    const auto x = randn_vec(n, rng);
    std::vector<double> ys(n), yp(n);
    const double ts = time_ms(5, [&] {
      kernels::map_serial(x.data(), ys.data(), n, [](double v) { return v / (1.0 + v * v); });
    });
    const double tp = time_ms(5, [&] {
      kernels::map_parallel(x.data(), yp.data(), n, [](double v) { return v / (1.0 + v * v); });
    });
    const bool same = std::memcmp(ys.data(), yp.data(), n * sizeof(double)) == 0;
    std::printf("%-28s %10.3f %10.3f %8.2fx %s\n", "map n=4194304", ts, tp, ts / tp,
                same ? "yes" : "NO");
  }
  return 0;
}
