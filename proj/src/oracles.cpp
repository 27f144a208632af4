#include "somix/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace somix::oracles {

namespace {
constexpr double two_pi = 2.0 * 3.14159265358979323846;

// Per-component log densities log(w_k N(x; mu_k, v_k I)).
std::vector<double> component_logs(const GaussianMixture& gm, const double* x) {
  const std::size_t k = gm.components(), d = gm.dim();
  std::vector<double> lg(k);
  for (std::size_t c = 0; c < k; ++c) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dx = x[j] - gm.means[c][j];
      sq += dx * dx;
    }
    lg[c] = std::log(gm.weights[c]) -
            0.5 * static_cast<double>(d) * std::log(two_pi * gm.variances[c]) -
            0.5 * sq / gm.variances[c];
  }
  return lg;
}

double logsumexp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}
}  // namespace

GaussianMixture::GaussianMixture(std::vector<double> w, std::vector<std::vector<double>> m,
                                 std::vector<double> v)
    : weights(std::move(w)), means(std::move(m)), variances(std::move(v)) {
  if (weights.empty() || weights.size() != means.size() || weights.size() != variances.size())
    throw std::invalid_argument("GaussianMixture: inconsistent component counts");
  const std::size_t d = means[0].size();
  if (d == 0) throw std::invalid_argument("GaussianMixture: zero-dimensional mean");
  double sum = 0.0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    if (weights[c] < 0.0) throw std::invalid_argument("GaussianMixture: negative weight");
    if (variances[c] <= 0.0) throw std::invalid_argument("GaussianMixture: non-positive variance");
    if (means[c].size() != d) throw std::invalid_argument("GaussianMixture: ragged means");
    sum += weights[c];
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("GaussianMixture: weights must sum to 1");
  for (double& wc : weights) wc /= sum;
}

double log_density(const GaussianMixture& gm, const double* x) {
  return logsumexp(component_logs(gm, x));
}

std::vector<double> score(const GaussianMixture& gm, const double* x) {
  const std::size_t k = gm.components(), d = gm.dim();
  std::vector<double> lg = component_logs(gm, x);
  const double lz = logsumexp(lg);
  std::vector<double> s(d, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    if (gm.weights[c] == 0.0) continue;
    const double r = std::exp(lg[c] - lz);  // responsibility
    for (std::size_t j = 0; j < d; ++j)
      s[j] += r * (gm.means[c][j] - x[j]) / gm.variances[c];
  }
  return s;
}

GaussianMixture convolve(const GaussianMixture& gm, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("convolve: sigma must be nonnegative");
  GaussianMixture out = gm;
  for (double& v : out.variances) v += sigma * sigma;
  return out;
}

GaussianMixture mix(const GaussianMixture& p, const GaussianMixture& q, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("mix: alpha must be in [0,1]");
  if (p.dim() != q.dim()) throw std::invalid_argument("mix: dimension mismatch");
  std::vector<double> w;
  std::vector<std::vector<double>> m;
  std::vector<double> v;
  for (std::size_t c = 0; c < p.components(); ++c) {
    const double wc = alpha * p.weights[c];
    if (wc == 0.0) continue;
    w.push_back(wc);
    m.push_back(p.means[c]);
    v.push_back(p.variances[c]);
  }
  for (std::size_t c = 0; c < q.components(); ++c) {
    const double wc = (1.0 - alpha) * q.weights[c];
    if (wc == 0.0) continue;
    w.push_back(wc);
    m.push_back(q.means[c]);
    v.push_back(q.variances[c]);
  }
  return GaussianMixture(std::move(w), std::move(m), std::move(v));
}

double mixture_log_density(const GaussianMixture& p, const GaussianMixture& q, double alpha,
                           const double* x) {
  return log_density(mix(p, q, alpha), x);
}

std::vector<double> mixture_score(const GaussianMixture& p, const GaussianMixture& q,
                                  double alpha, const double* x) {
  return score(mix(p, q, alpha), x);
}

std::vector<double> posterior_mean(const GaussianMixture& gm, const double* x_t, double sigma) {
  const std::size_t k = gm.components(), d = gm.dim();
  const GaussianMixture noisy = convolve(gm, sigma);
  std::vector<double> lg = component_logs(noisy, x_t);
  const double lz = logsumexp(lg);
  const double s2 = sigma * sigma;
  std::vector<double> out(d, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    if (gm.weights[c] == 0.0) continue;
    const double r = std::exp(lg[c] - lz);
    const double vc = gm.variances[c];
    // x | x_t, component c is Gaussian with mean (s2*mu + vc*x_t)/(vc+s2)
    for (std::size_t j = 0; j < d; ++j)
      out[j] += r * (s2 * gm.means[c][j] + vc * x_t[j]) / (vc + s2);
  }
  return out;
}

std::vector<double> sample(const GaussianMixture& gm, Rng& rng) {
  std::vector<double> x(gm.dim());
  sample_n(gm, rng, 1, x.data());
  return x;
}

void sample_n(const GaussianMixture& gm, Rng& rng, std::size_t n, double* out) {
  const std::size_t k = gm.components(), d = gm.dim();
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    std::size_t c = 0;
    double acc = 0.0;
    for (; c < k; ++c) {
      acc += gm.weights[c];
      if (u < acc) break;
    }
    if (c == k) c = k - 1;  // u landed in rounding slack at the top
    const double sd = std::sqrt(gm.variances[c]);
    for (std::size_t j = 0; j < d; ++j)
      out[i * d + j] = gm.means[c][j] + sd * rng.normal();
  }
}

double cdf_1d(const GaussianMixture& gm, double x) {
  if (gm.dim() != 1) throw std::invalid_argument("cdf_1d: mixture is not 1-D");
  double acc = 0.0;
  for (std::size_t c = 0; c < gm.components(); ++c) {
    const double z = (x - gm.means[c][0]) / std::sqrt(gm.variances[c]);
    acc += gm.weights[c] * 0.5 * std::erfc(-z / std::sqrt(2.0));
  }
  return acc;
}

std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& at, double step) {
  if (step <= 0.0) throw std::invalid_argument("finite_diff_grad: step must be positive");
  std::vector<double> x = at;
  std::vector<double> g(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double xi = at[i];
    x[i] = xi + step;
    const double fp = f(x);
    x[i] = xi - step;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

}  // namespace somix::oracles
