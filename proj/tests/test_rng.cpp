#include <doctest.h>

#include <cmath>
#include <vector>

#include "somix/rng.hpp"

using namespace somix;

TEST_CASE("same seed gives the same stream, different seeds differ") {
  Rng a(42), b(42), c(43);
  bool all_same = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.uniform(), vb = b.uniform(), vc = c.uniform();
    all_same = all_same && va == vb;
    any_diff = any_diff || va != vc;
  }
  CHECK(all_same);
  CHECK(any_diff);
}

TEST_CASE("uniform stays in [0,1) with the right first moments") {
  Rng rng(7);
  double mn = 1.0, mx = 0.0, mean = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    mn = std::min(mn, u);
    mx = std::max(mx, u);
    mean += u;
  }
  mean /= n;
  CHECK(mn >= 0.0);
  CHECK(mx < 1.0);
  CHECK(std::abs(mean - 0.5) < 0.005);
}

TEST_CASE("normal has unit variance and zero mean") {
  Rng rng(8);
  const int n = 200000;
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    m1 += x;
    m2 += x * x;
  }
  m1 /= n;
  m2 /= n;
  CHECK(std::abs(m1) < 0.01);
  CHECK(std::abs(m2 - 1.0) < 0.02);
}

TEST_CASE("index is bounded and roughly uniform") {
  Rng rng(9);
  std::vector<int> counts(10, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[rng.index(10)]++;
  for (const int c : counts) {
    CHECK(c > 9000);
    CHECK(c < 11000);
  }
  CHECK_THROWS(rng.index(0));
}

TEST_CASE("state save/load resumes the exact stream") {
  Rng a(123);
  for (int i = 0; i < 17; ++i) a.normal();
  const std::string s = a.save_state();
  std::vector<double> expect(20);
  for (auto& v : expect) v = a.uniform();
  Rng b(0);
  b.load_state(s);
  for (const double v : expect) CHECK(b.uniform() == v);
  CHECK_THROWS(b.load_state("not a state"));
}
