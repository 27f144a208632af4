#include "somix/autodiff.hpp"

#include <cmath>

#include "somix/kernels.hpp"

namespace somix::ad {

namespace {

void check_finite(const char* op, const Tensor& t) {
  if (!kernels::all_finite(t.data().data(), t.size()))
    throw NumericError(std::string(op) + ": non-finite output");
}

void check_defined(const char* op, const Tensor& t) {
  if (!t.defined()) throw std::invalid_argument(std::string(op) + ": undefined tensor");
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                              std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
}

// Accumulates src into dst elementwise; rows are independent.
void axpy_into(std::vector<double>& dst, const std::vector<double>& src) {
  kernels::map2(dst.data(), src.data(), dst.data(), dst.size(),
                [](double d, double s) { return d + s; });
}

}  // namespace

Tensor Tensor::make(std::size_t rows, std::size_t cols, bool requires_grad) {
  if (rows == 0 || cols == 0)
    throw std::invalid_argument("Tensor: dimensions must be positive");
  Tensor t;
  t.node_ = std::make_shared<Node>();
  t.node_->rows = rows;
  t.node_->cols = cols;
  t.node_->data.assign(rows * cols, 0.0);
  t.node_->requires_grad = requires_grad;
  if (requires_grad) t.node_->grad.assign(rows * cols, 0.0);
  return t;
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return make(rows, cols, requires_grad);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double v, bool requires_grad) {
  Tensor t = make(rows, cols, requires_grad);
  t.data().assign(rows * cols, v);
  return t;
}

Tensor Tensor::from_data(std::size_t rows, std::size_t cols, std::vector<double> data,
                         bool requires_grad) {
  if (data.size() != rows * cols)
    throw std::invalid_argument("Tensor::from_data: data size does not match shape");
  Tensor t = make(rows, cols, requires_grad);
  t.data() = std::move(data);
  return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) { return full(1, 1, v, requires_grad); }

Tensor Tensor::randn(std::size_t rows, std::size_t cols, Rng& rng, double stddev,
                     bool requires_grad) {
  Tensor t = make(rows, cols, requires_grad);
  rng.fill_normal(t.data().data(), t.size(), stddev);
  return t;
}

double Tensor::value() const {
  if (size() != 1) throw std::invalid_argument("Tensor::value: tensor is not scalar");
  return node_->data[0];
}

std::vector<double>& Tensor::grad() {
  if (!node_->requires_grad)
    throw std::logic_error("Tensor::grad: tensor does not require grad");
  return node_->grad;
}

const std::vector<double>& Tensor::grad() const {
  if (!node_->requires_grad)
    throw std::logic_error("Tensor::grad: tensor does not require grad");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_->requires_grad) node_->grad.assign(node_->grad.size(), 0.0);
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw std::logic_error("Tape::backward: tape already consumed");
  if (!loss.defined() || loss.size() != 1)
    throw std::invalid_argument("Tape::backward: loss must be a defined scalar");
  if (!loss.requires_grad())
    throw std::invalid_argument("Tape::backward: loss does not require grad");
  consumed_ = true;
  const_cast<Tensor&>(loss).grad()[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  check_defined("matmul", a);
  check_defined("matmul", b);
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor out = Tensor::zeros(n, m, rg);
  kernels::mm(a.data().data(), false, b.data().data(), false, out.data().data(), n, k, m);
  check_finite("matmul", out);
  if (rg) {
    Tensor ac = a, bc = b, oc = out;
    tape.record([ac, bc, oc, n, k, m]() mutable {
      const double* g = oc.grad().data();
      if (ac.requires_grad())
        kernels::mm(g, false, bc.data().data(), true, ac.grad().data(), n, m, k, true);
      if (bc.requires_grad())
        kernels::mm(ac.data().data(), true, g, false, bc.grad().data(), k, n, m, true);
    });
  }
  return out;
}

namespace {
enum class Bcast { same, row, scalar };

Bcast classify_broadcast(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Bcast::same;
  if (b.rows() == 1 && b.cols() == 1) return Bcast::scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Bcast::row;
  shape_error(op, a, b);
}

// Column sums of g{n,m} accumulated into db{m}; per-column loops keep the
// accumulation order fixed.
void accumulate_col_sums(const std::vector<double>& g, std::size_t n, std::size_t m,
                         std::vector<double>& db) {
  kernels::for_rows(m, [&](std::size_t j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += g[i * m + j];
    db[j] += s;
  });
}

Tensor add_sub_impl(const char* op, Tape& tape, const Tensor& a, const Tensor& b, double sign) {
  check_defined(op, a);
  check_defined(op, b);
  const Bcast bc = classify_broadcast(op, a, b);
  const std::size_t n = a.rows(), m = a.cols();
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor out = Tensor::zeros(n, m, rg);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  switch (bc) {
    case Bcast::same:
      kernels::map2(pa, pb, po, n * m, [sign](double x, double y) { return x + sign * y; });
      break;
    case Bcast::row:
      kernels::for_rows(n, [&](std::size_t i) {
        for (std::size_t j = 0; j < m; ++j) po[i * m + j] = pa[i * m + j] + sign * pb[j];
      });
      break;
    case Bcast::scalar: {
      const double v = sign * pb[0];
      kernels::map(pa, po, n * m, [v](double x) { return x + v; });
      break;
    }
  }
  check_finite(op, out);
  if (rg) {
    Tensor ac = a, bcopy = b, oc = out;
    tape.record([ac, bcopy, oc, bc, n, m, sign]() mutable {
      const std::vector<double>& g = oc.grad();
      if (ac.requires_grad()) axpy_into(ac.grad(), g);
      if (bcopy.requires_grad()) {
        std::vector<double>& db = bcopy.grad();
        switch (bc) {
          case Bcast::same:
            kernels::map2(db.data(), g.data(), db.data(), g.size(),
                          [sign](double d, double gg) { return d + sign * gg; });
            break;
          case Bcast::row:
            if (sign > 0) {
              accumulate_col_sums(g, n, m, db);
            } else {
              std::vector<double> cs(m, 0.0);
              accumulate_col_sums(g, n, m, cs);
              for (std::size_t j = 0; j < m; ++j) db[j] -= cs[j];
            }
            break;
          case Bcast::scalar:
            db[0] += sign * kernels::reduce_sum(g.data(), g.size());
            break;
        }
      }
    });
  }
  return out;
}
}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return add_sub_impl("add", tape, a, b, 1.0);
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return add_sub_impl("sub", tape, a, b, -1.0);
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  check_defined("mul", a);
  check_defined("mul", b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("mul", a, b);
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor out = Tensor::zeros(a.rows(), a.cols(), rg);
  kernels::map2(a.data().data(), b.data().data(), out.data().data(), a.size(),
                [](double x, double y) { return x * y; });
  check_finite("mul", out);
  if (rg) {
    Tensor ac = a, bc = b, oc = out;
    tape.record([ac, bc, oc]() mutable {
      const std::vector<double>& g = oc.grad();
      if (ac.requires_grad()) {
        std::vector<double>& da = ac.grad();
        const std::vector<double>& vb = bc.data();
        kernels::for_rows(g.size(), [&](std::size_t i) { da[i] += g[i] * vb[i]; });
      }
      if (bc.requires_grad()) {
        std::vector<double>& db = bc.grad();
        const std::vector<double>& va = ac.data();
        kernels::for_rows(g.size(), [&](std::size_t i) { db[i] += g[i] * va[i]; });
      }
    });
  }
  return out;
}

Tensor divide(Tape& tape, const Tensor& a, const Tensor& b) {
  check_defined("divide", a);
  check_defined("divide", b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("divide", a, b);
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor out = Tensor::zeros(a.rows(), a.cols(), rg);
  kernels::map2(a.data().data(), b.data().data(), out.data().data(), a.size(),
                [](double x, double y) { return x / y; });
  check_finite("divide", out);
  if (rg) {
    Tensor ac = a, bc = b, oc = out;
    tape.record([ac, bc, oc]() mutable {
      const std::vector<double>& g = oc.grad();
      const std::vector<double>& vb = bc.data();
      if (ac.requires_grad()) {
        std::vector<double>& da = ac.grad();
        kernels::for_rows(g.size(), [&](std::size_t i) { da[i] += g[i] / vb[i]; });
      }
      if (bc.requires_grad()) {
        std::vector<double>& db = bc.grad();
        const std::vector<double>& vo = oc.data();
        kernels::for_rows(g.size(), [&](std::size_t i) { db[i] -= g[i] * vo[i] / vb[i]; });
      }
    });
  }
  return out;
}

Tensor add_scalar(Tape& tape, const Tensor& a, double c) {
  check_defined("add_scalar", a);
  Tensor out = Tensor::zeros(a.rows(), a.cols(), a.requires_grad());
  kernels::map(a.data().data(), out.data().data(), a.size(), [c](double x) { return x + c; });
  check_finite("add_scalar", out);
  if (a.requires_grad()) {
    Tensor ac = a, oc = out;
    tape.record([ac, oc]() mutable { axpy_into(ac.grad(), oc.grad()); });
  }
  return out;
}

Tensor mul_scalar(Tape& tape, const Tensor& a, double c) {
  check_defined("mul_scalar", a);
  Tensor out = Tensor::zeros(a.rows(), a.cols(), a.requires_grad());
  kernels::map(a.data().data(), out.data().data(), a.size(), [c](double x) { return x * c; });
  check_finite("mul_scalar", out);
  if (a.requires_grad()) {
    Tensor ac = a, oc = out;
    tape.record([ac, oc, c]() mutable {
      std::vector<double>& da = ac.grad();
      const std::vector<double>& g = oc.grad();
      kernels::for_rows(g.size(), [&](std::size_t i) { da[i] += c * g[i]; });
    });
  }
  return out;
}

Tensor mul_rows(Tape& tape, const Tensor& x, const Tensor& s) {
  check_defined("mul_rows", x);
  check_defined("mul_rows", s);
  if (s.rows() != x.rows() || s.cols() != 1) shape_error("mul_rows", x, s);
  const std::size_t n = x.rows(), m = x.cols();
  const bool rg = x.requires_grad() || s.requires_grad();
  Tensor out = Tensor::zeros(n, m, rg);
  const double* px = x.data().data();
  const double* ps = s.data().data();
  double* po = out.data().data();
  kernels::for_rows(n, [&](std::size_t i) {
    const double si = ps[i];
    for (std::size_t j = 0; j < m; ++j) po[i * m + j] = px[i * m + j] * si;
  });
  check_finite("mul_rows", out);
  if (rg) {
    Tensor xc = x, sc = s, oc = out;
    tape.record([xc, sc, oc, n, m]() mutable {
      const std::vector<double>& g = oc.grad();
      if (xc.requires_grad()) {
        std::vector<double>& dx = xc.grad();
        const std::vector<double>& vs = sc.data();
        kernels::for_rows(n, [&](std::size_t i) {
          const double si = vs[i];
          for (std::size_t j = 0; j < m; ++j) dx[i * m + j] += g[i * m + j] * si;
        });
      }
      if (sc.requires_grad()) {
        std::vector<double>& ds = sc.grad();
        const std::vector<double>& vx = xc.data();
        kernels::for_rows(n, [&](std::size_t i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += g[i * m + j] * vx[i * m + j];
          ds[i] += acc;
        });
      }
    });
  }
  return out;
}

Tensor concat(Tape& tape, const Tensor& a, const Tensor& b, int axis) {
  check_defined("concat", a);
  check_defined("concat", b);
  if (axis != 0 && axis != 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor out;
  if (axis == 0) {
    if (a.cols() != b.cols()) shape_error("concat", a, b);
    out = Tensor::zeros(a.rows() + b.rows(), a.cols(), rg);
    std::copy(a.data().begin(), a.data().end(), out.data().begin());
    std::copy(b.data().begin(), b.data().end(), out.data().begin() + a.size());
  } else {
    if (a.rows() != b.rows()) shape_error("concat", a, b);
    const std::size_t n = a.rows(), ma = a.cols(), mb = b.cols();
    out = Tensor::zeros(n, ma + mb, rg);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(a.data().begin() + i * ma, a.data().begin() + (i + 1) * ma,
                out.data().begin() + i * (ma + mb));
      std::copy(b.data().begin() + i * mb, b.data().begin() + (i + 1) * mb,
                out.data().begin() + i * (ma + mb) + ma);
    }
  }
  check_finite("concat", out);
  if (rg) {
    Tensor ac = a, bc = b, oc = out;
    tape.record([ac, bc, oc, axis]() mutable {
      const std::vector<double>& g = oc.grad();
      if (axis == 0) {
        if (ac.requires_grad()) {
          std::vector<double>& da = ac.grad();
          for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i];
        }
        if (bc.requires_grad()) {
          std::vector<double>& db = bc.grad();
          const std::size_t off = ac.data().size();
          for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[off + i];
        }
      } else {
        const std::size_t n = ac.rows(), ma = ac.cols(), mb = bc.cols();
        if (ac.requires_grad()) {
          std::vector<double>& da = ac.grad();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < ma; ++j) da[i * ma + j] += g[i * (ma + mb) + j];
        }
        if (bc.requires_grad()) {
          std::vector<double>& db = bc.grad();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < mb; ++j) db[i * mb + j] += g[i * (ma + mb) + ma + j];
        }
      }
    });
  }
  return out;
}

Tensor sum(Tape& tape, const Tensor& a) {
  check_defined("sum", a);
  Tensor out = Tensor::scalar(kernels::reduce_sum(a.data().data(), a.size()), a.requires_grad());
  check_finite("sum", out);
  if (a.requires_grad()) {
    Tensor ac = a, oc = out;
    tape.record([ac, oc]() mutable {
      const double g = oc.grad()[0];
      std::vector<double>& da = ac.grad();
      kernels::for_rows(da.size(), [&](std::size_t i) { da[i] += g; });
    });
  }
  return out;
}

Tensor mean(Tape& tape, const Tensor& a) {
  check_defined("mean", a);
  const double inv = 1.0 / static_cast<double>(a.size());
  Tensor out =
      Tensor::scalar(kernels::reduce_sum(a.data().data(), a.size()) * inv, a.requires_grad());
  check_finite("mean", out);
  if (a.requires_grad()) {
    Tensor ac = a, oc = out;
    tape.record([ac, oc, inv]() mutable {
      const double g = oc.grad()[0] * inv;
      std::vector<double>& da = ac.grad();
      kernels::for_rows(da.size(), [&](std::size_t i) { da[i] += g; });
    });
  }
  return out;
}

Tensor row_sumsq(Tape& tape, const Tensor& x) {
  check_defined("row_sumsq", x);
  const std::size_t n = x.rows(), m = x.cols();
  Tensor out = Tensor::zeros(n, 1, x.requires_grad());
  const double* px = x.data().data();
  double* po = out.data().data();
  kernels::for_rows(n, [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc += px[i * m + j] * px[i * m + j];
    po[i] = acc;
  });
  check_finite("row_sumsq", out);
  if (x.requires_grad()) {
    Tensor xc = x, oc = out;
    tape.record([xc, oc, n, m]() mutable {
      const std::vector<double>& g = oc.grad();
      std::vector<double>& dx = xc.grad();
      const std::vector<double>& vx = xc.data();
      kernels::for_rows(n, [&](std::size_t i) {
        const double gi = 2.0 * g[i];
        for (std::size_t j = 0; j < m; ++j) dx[i * m + j] += gi * vx[i * m + j];
      });
    });
  }
  return out;
}

Tensor row_abssum(Tape& tape, const Tensor& x) {
  check_defined("row_abssum", x);
  const std::size_t n = x.rows(), m = x.cols();
  Tensor out = Tensor::zeros(n, 1, x.requires_grad());
  const double* px = x.data().data();
  double* po = out.data().data();
  kernels::for_rows(n, [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc += std::abs(px[i * m + j]);
    po[i] = acc;
  });
  check_finite("row_abssum", out);
  if (x.requires_grad()) {
    Tensor xc = x, oc = out;
    tape.record([xc, oc, n, m]() mutable {
      const std::vector<double>& g = oc.grad();
      std::vector<double>& dx = xc.grad();
      const std::vector<double>& vx = xc.data();
      kernels::for_rows(n, [&](std::size_t i) {
        for (std::size_t j = 0; j < m; ++j) {
          const double v = vx[i * m + j];
          const double sign = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
          dx[i * m + j] += g[i] * sign;
        }
      });
    });
  }
  return out;
}

namespace {
// Unary op plumbing: forward maps f, backward accumulates dfdx(x, out) * g.
template <class F, class DF>
Tensor unary_op(const char* op, Tape& tape, const Tensor& x, F f, DF dfdx) {
  check_defined(op, x);
  Tensor out = Tensor::zeros(x.rows(), x.cols(), x.requires_grad());
  kernels::map(x.data().data(), out.data().data(), x.size(), f);
  check_finite(op, out);
  if (x.requires_grad()) {
    Tensor xc = x, oc = out;
    tape.record([xc, oc, dfdx]() mutable {
      std::vector<double>& dx = xc.grad();
      const std::vector<double>& g = oc.grad();
      const std::vector<double>& vx = xc.data();
      const std::vector<double>& vo = oc.data();
      kernels::for_rows(g.size(), [&](std::size_t i) { dx[i] += dfdx(vx[i], vo[i]) * g[i]; });
    });
  }
  return out;
}
}  // namespace

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_value(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

Tensor sqrt(Tape& tape, const Tensor& x) {
  return unary_op("sqrt", tape, x, [](double v) { return std::sqrt(v); },
                  [](double, double o) { return 0.5 / o; });
}

Tensor log(Tape& tape, const Tensor& x) {
  return unary_op("log", tape, x, [](double v) { return std::log(v); },
                  [](double v, double) { return 1.0 / v; });
}

Tensor exp(Tape& tape, const Tensor& x) {
  return unary_op("exp", tape, x, [](double v) { return std::exp(v); },
                  [](double, double o) { return o; });
}

Tensor cos(Tape& tape, const Tensor& x) {
  return unary_op("cos", tape, x, [](double v) { return std::cos(v); },
                  [](double v, double) { return -std::sin(v); });
}

Tensor sin(Tape& tape, const Tensor& x) {
  return unary_op("sin", tape, x, [](double v) { return std::sin(v); },
                  [](double v, double) { return std::cos(v); });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  return unary_op("sigmoid", tape, x, [](double v) { return sigmoid_value(v); },
                  [](double, double o) { return o * (1.0 - o); });
}

Tensor softplus(Tape& tape, const Tensor& x) {
  return unary_op("softplus", tape, x, [](double v) { return softplus_value(v); },
                  [](double v, double) { return sigmoid_value(v); });
}

Tensor silu(Tape& tape, const Tensor& x) {
  return unary_op("silu", tape, x, [](double v) { return v * sigmoid_value(v); },
                  [](double v, double) {
                    const double s = sigmoid_value(v);
                    return s * (1.0 + v * (1.0 - s));
                  });
}

Tensor leaky_relu(Tape& tape, const Tensor& x, double slope) {
  return unary_op("leaky_relu", tape, x,
                  [slope](double v) { return v > 0.0 ? v : slope * v; },
                  [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor stop_gradient(const Tensor& x) {
  if (!x.defined()) throw std::invalid_argument("stop_gradient: undefined tensor");
  Tensor t;
  t.node_ = std::make_shared<Tensor::Node>();
  t.node_->rows = x.rows();
  t.node_->cols = x.cols();
  t.node_->data = x.data();
  t.node_->requires_grad = false;
  return t;
}

}  // namespace somix::ad
