#pragma once

// Reverse-mode autodiff over dense 2-D float64 tensors. A Tensor is a shared
// handle; copies alias the same storage. Ops are free functions that take the
// Tape they record onto. A node is recorded only when some input requires
// grad, and backward visits recorded nodes exactly once, in reverse order of
// construction. Every op validates shapes and throws NumericError if it
// produces a non-finite value.

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "somix/rng.hpp"

namespace somix::ad {

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor full(std::size_t rows, std::size_t cols, double v, bool requires_grad = false);
  static Tensor from_data(std::size_t rows, std::size_t cols, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor randn(std::size_t rows, std::size_t cols, Rng& rng, double stddev = 1.0,
                      bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->data.size(); }

  std::vector<double>& data() { return node_->data; }
  const std::vector<double>& data() const { return node_->data; }

  double value() const;                       // scalar tensors only
  double at(std::size_t r, std::size_t c) const { return node_->data[r * node_->cols + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  std::vector<double>& grad();                // requires requires_grad()
  const std::vector<double>& grad() const;
  void zero_grad();

  // Identity of the underlying storage; used to detect aliasing.
  const void* id() const { return node_.get(); }

 private:
  struct Node {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;
    std::vector<double> grad;   // sized iff requires_grad
    bool requires_grad = false;
  };
  std::shared_ptr<Node> node_;
  static Tensor make(std::size_t rows, std::size_t cols, bool requires_grad);
  friend Tensor stop_gradient(const Tensor&);
};

class Tape {
 public:
  void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

  // Seeds d(loss)/d(loss) = 1 and runs all recorded nodes once, newest first.
  // The tape is single-use: a second backward() throws.
  void backward(const Tensor& loss);

  std::size_t node_count() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }
  void clear() {
    nodes_.clear();
    consumed_ = false;
  }

 private:
  std::vector<std::function<void()>> nodes_;
  bool consumed_ = false;
};

// a{n,k} * b{k,m} -> {n,m}
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

// Elementwise a + b. b may also be a row {1,m} added to every row of a, or a
// scalar {1,1} added everywhere.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
// Elementwise a - b (same broadcasting as add).
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
// Elementwise product / quotient, same shapes only.
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor divide(Tape& tape, const Tensor& a, const Tensor& b);

Tensor add_scalar(Tape& tape, const Tensor& a, double c);
Tensor mul_scalar(Tape& tape, const Tensor& a, double c);

// out[i,j] = x[i,j] * s[i], s has shape {n,1}.
Tensor mul_rows(Tape& tape, const Tensor& x, const Tensor& s);

// axis 0 stacks rows (cols must match), axis 1 stacks cols (rows must match).
Tensor concat(Tape& tape, const Tensor& a, const Tensor& b, int axis);

Tensor sum(Tape& tape, const Tensor& a);    // -> {1,1}
Tensor mean(Tape& tape, const Tensor& a);   // -> {1,1}

// Per-row reductions -> {n,1}.
Tensor row_sumsq(Tape& tape, const Tensor& x);
Tensor row_abssum(Tape& tape, const Tensor& x);  // d|x|/dx at 0 is taken as 0

Tensor sqrt(Tape& tape, const Tensor& x);
Tensor log(Tape& tape, const Tensor& x);
Tensor exp(Tape& tape, const Tensor& x);
Tensor cos(Tape& tape, const Tensor& x);
Tensor sin(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor softplus(Tape& tape, const Tensor& x);
Tensor silu(Tape& tape, const Tensor& x);
Tensor leaky_relu(Tape& tape, const Tensor& x, double slope = 0.01);

// Detached copy: same values, requires_grad = false, records nothing.
Tensor stop_gradient(const Tensor& x);

// Numerically stable scalar helpers shared with non-tape code paths.
double sigmoid_value(double x);
double softplus_value(double x);

}  // namespace somix::ad
