#include "somix/adamw.hpp"

#include <cmath>
#include <stdexcept>

#include "somix/kernels.hpp"

namespace somix {

AdamW::AdamW(std::vector<nets::Param> params, Options opts)
    : params_(std::move(params)), opts_(opts) {
  if (params_.empty()) throw std::invalid_argument("AdamW: no parameters");
  for (auto& p : params_) {
    if (!p.tensor.requires_grad())
      throw std::invalid_argument("AdamW: parameter does not require grad: " + p.name);
    m_.emplace_back(p.tensor.size(), 0.0);
    v_.emplace_back(p.tensor.size(), 0.0);
  }
}

bool AdamW::step() {
  for (auto& p : params_) {
    const std::vector<double>& g = p.tensor.grad();
    if (!kernels::all_finite(g.data(), g.size())) {
      ++skipped_;
      return false;
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    std::vector<double>& w = params_[pi].tensor.data();
    const std::vector<double>& g = params_[pi].tensor.grad();
    std::vector<double>& m = m_[pi];
    std::vector<double>& v = v_[pi];
    kernels::for_rows(w.size(), [&](std::size_t i) {
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g[i];
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= opts_.lr * (mhat / (std::sqrt(vhat) + opts_.eps) + opts_.weight_decay * w[i]);
    });
  }
  return true;
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

double AdamW::grad_norm() const {
  double acc = 0.0;
  for (const auto& p : params_) {
    const std::vector<double>& g = p.tensor.grad();
    for (double x : g) acc += x * x;
  }
  return std::sqrt(acc);
}

std::vector<AdamW::StateArray> AdamW::state_arrays() {
  std::vector<StateArray> out;
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    out.push_back({params_[pi].name + ".m", &m_[pi]});
    out.push_back({params_[pi].name + ".v", &v_[pi]});
  }
  return out;
}

}  // namespace somix
