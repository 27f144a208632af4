#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "somix/autodiff.hpp"
#include "somix/rng.hpp"

using namespace somix;
using ad::Tape;
using ad::Tensor;

namespace {

// Central-difference check of d(loss)/d(input) for every coordinate of every
// input. loss_fn must rebuild the graph from scratch on each call.
void gradcheck(std::vector<Tensor> inputs, const std::function<Tensor(Tape&)>& loss_fn,
               double tol = 5e-6) {
  for (auto& t : inputs) t.zero_grad();
  Tape tape;
  Tensor loss = loss_fn(tape);
  tape.backward(loss);
  const double h = 1e-5;
  for (auto& t : inputs) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double keep = t.data()[i];
      t.data()[i] = keep + h;
      Tape tp;
      const double fp = loss_fn(tp).value();
      t.data()[i] = keep - h;
      Tape tm;
      const double fm = loss_fn(tm).value();
      t.data()[i] = keep;
      const double fd = (fp - fm) / (2.0 * h);
      CHECK(t.grad()[i] == doctest::Approx(fd).epsilon(tol).scale(1.0));
    }
  }
}

Tensor randn_grad(std::size_t r, std::size_t c, Rng& rng) {
  return Tensor::randn(r, c, rng, 1.0, true);
}

}  // namespace

TEST_CASE("binary and unary op gradients match finite differences") {
  Rng rng(11);

  SUBCASE("matmul") {
    Tensor a = randn_grad(3, 4, rng), b = randn_grad(4, 2, rng);
    gradcheck({a, b}, [&](Tape& t) { return ad::sum(t, ad::matmul(t, a, b)); });
  }
  SUBCASE("add sub mul divide elementwise") {
    Tensor a = randn_grad(3, 3, rng), b = randn_grad(3, 3, rng);
    for (auto& v : b.data()) v += v >= 0.0 ? 1.5 : -1.5;  // keep divisors away from 0
    gradcheck({a, b}, [&](Tape& t) {
      Tensor s = ad::add(t, ad::sub(t, a, b), ad::mul(t, a, b));
      return ad::sum(t, ad::divide(t, s, b));
    });
  }
  SUBCASE("row and scalar broadcasts") {
    Tensor a = randn_grad(4, 3, rng), row = randn_grad(1, 3, rng), c = randn_grad(1, 1, rng);
    gradcheck({a, row, c}, [&](Tape& t) {
      return ad::sum(t, ad::add(t, ad::add(t, a, row), c));
    });
  }
  SUBCASE("scalar constants and mul_rows") {
    Tensor a = randn_grad(4, 3, rng), s = randn_grad(4, 1, rng);
    gradcheck({a, s}, [&](Tape& t) {
      return ad::mean(t, ad::mul_scalar(t, ad::add_scalar(t, ad::mul_rows(t, a, s), 0.7), 1.3));
    });
  }
  SUBCASE("concat both axes") {
    Tensor a = randn_grad(2, 3, rng), b = randn_grad(2, 3, rng);
    gradcheck({a, b}, [&](Tape& t) {
      Tensor v = ad::concat(t, a, b, 0);
      Tensor h = ad::concat(t, a, b, 1);
      return ad::add(t, ad::sum(t, ad::mul(t, v, v)), ad::sum(t, ad::mul(t, h, h)));
    });
  }
  SUBCASE("row reductions") {
    Tensor a = randn_grad(3, 4, rng);
    for (auto& v : a.data()) v += v >= 0.0 ? 0.5 : -0.5;  // |x| kink avoided
    gradcheck({a}, [&](Tape& t) {
      return ad::add(t, ad::sum(t, ad::row_sumsq(t, a)), ad::sum(t, ad::row_abssum(t, a)));
    });
  }
  SUBCASE("smooth scalar functions") {
    Tensor a = randn_grad(3, 3, rng);
    for (auto& v : a.data()) v = 0.5 + std::abs(v);  // sqrt/log domain
    gradcheck({a}, [&](Tape& t) {
      Tensor u = ad::add(t, ad::sqrt(t, a), ad::log(t, a));
      return ad::sum(t, ad::mul(t, u, ad::exp(t, ad::mul_scalar(t, a, -0.5))));
    });
  }
  SUBCASE("trig and activations") {
    Tensor a = randn_grad(3, 3, rng);
    for (auto& v : a.data()) v += v >= 0.0 ? 0.3 : -0.3;  // leaky_relu kink avoided
    gradcheck({a}, [&](Tape& t) {
      Tensor u = ad::add(t, ad::cos(t, a), ad::sin(t, a));
      u = ad::add(t, u, ad::sigmoid(t, a));
      u = ad::add(t, u, ad::softplus(t, a));
      u = ad::add(t, u, ad::silu(t, a));
      u = ad::add(t, u, ad::leaky_relu(t, a, 0.01));
      return ad::sum(t, u);
    });
  }
}

TEST_CASE("a tensor used twice accumulates both gradient paths") {
  Tensor x = Tensor::from_data(1, 2, {2.0, -3.0}, true);
  Tape t;
  Tensor y = ad::sum(t, ad::mul(t, x, x));
  t.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(4.0));
  CHECK(x.grad()[1] == doctest::Approx(-6.0));
}

TEST_CASE("stop_gradient blocks the backward path") {
  Tensor x = Tensor::from_data(1, 2, {1.0, 2.0}, true);
  Tape t;
  Tensor y = ad::sum(t, ad::mul(t, x, ad::stop_gradient(x)));
  t.backward(y);
  // Only the live factor contributes: d/dx sum(x * const) = const = x values.
  CHECK(x.grad()[0] == doctest::Approx(1.0));
  CHECK(x.grad()[1] == doctest::Approx(2.0));
}

TEST_CASE("shape mismatches and domain violations throw") {
  Rng rng(12);
  Tensor a = Tensor::randn(2, 3, rng), b = Tensor::randn(3, 2, rng);
  Tape t;
  CHECK_THROWS(ad::add(t, a, b));
  CHECK_THROWS(ad::matmul(t, a, a));
  Tensor neg = Tensor::from_data(1, 1, {-1.0});
  CHECK_THROWS_AS(ad::log(t, neg), ad::NumericError);
  CHECK_THROWS_AS(ad::sqrt(t, neg), ad::NumericError);
  Tensor z = Tensor::from_data(1, 1, {0.0});
  CHECK_THROWS_AS(ad::divide(t, neg, z), ad::NumericError);
}

TEST_CASE("a tape refuses to run backward twice") {
  Tensor x = Tensor::from_data(1, 1, {3.0}, true);
  Tape t;
  Tensor y = ad::mul(t, x, x);
  t.backward(y);
  CHECK(t.consumed());
  CHECK_THROWS(t.backward(y));
  t.clear();
  CHECK_FALSE(t.consumed());
}

TEST_CASE("value() is restricted to scalars and grads to grad-tracking tensors") {
  Tensor m = Tensor::zeros(2, 2);
  CHECK_THROWS(m.value());
  CHECK_THROWS(m.grad());
  Tensor s = Tensor::scalar(4.5);
  CHECK(s.value() == 4.5);
}

TEST_CASE("tensor copies alias the same storage") {
  Tensor x = Tensor::zeros(1, 2);
  Tensor y = x;
  y.data()[0] = 7.0;
  CHECK(x.data()[0] == 7.0);
  CHECK(x.id() == y.id());
}
