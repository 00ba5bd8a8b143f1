#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stann/errors.hpp"

namespace stann::diff {

// Dense real tensor with reverse-mode autodiff. Values are 64-bit and
// row-major. Tensors are cheap shared handles; the recorded op DAG hangs off
// them (parents + local-gradient closure) and is discarded when the last
// handle goes away. One graph is confined to one thread.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> data,
                          bool requires_grad = false);

  bool defined() const { return d_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t size() const;
  std::size_t rows() const;  // shape[0] (1 for scalars)
  std::size_t cols() const;  // trailing extent product

  double value() const;  // scalar tensors only
  std::span<const double> data() const;
  std::span<double> mutable_data();  // leaf edits between graph runs
  std::span<const double> grad() const;
  bool requires_grad() const;
  void zero_grad();

  // Identity of the underlying node; creation order == topological order.
  std::uint64_t node_id() const;

  struct Impl;
  std::shared_ptr<Impl> impl() const { return d_; }
  explicit Tensor(std::shared_ptr<Impl> d) : d_(std::move(d)) {}

 private:
  std::shared_ptr<Impl> d_;
};

enum class Activation { kSigmoid, kTanh, kRelu, kIdentity };
enum class Reduction { kSum, kMean, kSqL2, kL1 };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

// --- recorded operations ---------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
Tensor scale(const Tensor& a, const Tensor& s);  // s is a 1-element tensor
Tensor activation(Activation kind, const Tensor& x);
Tensor reduce(Reduction kind, const Tensor& x);

// Elementwise clamp to [lo, hi]; gradient passes through strictly inside the
// band and is zero where the clamp engaged.
Tensor clamp(const Tensor& x, double lo, double hi);

inline Tensor sum(const Tensor& x) { return reduce(Reduction::kSum, x); }
inline Tensor mean(const Tensor& x) { return reduce(Reduction::kMean, x); }
inline Tensor sq_l2(const Tensor& x) { return reduce(Reduction::kSqL2, x); }
inline Tensor l1(const Tensor& x) { return reduce(Reduction::kL1, x); }

// Shape ops. select_row picks index i along axis 0 (gradient scatters back);
// slice_rows takes the half-open row range [r0, r1) of a matrix; repeat_rows
// tiles a 1xq row into nxq (gradient is the column sum); concat_rows stacks
// equal-width rows; reshape reinterprets the buffer (gradient passes through).
Tensor select_row(const Tensor& x, std::size_t i);
Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1);
Tensor repeat_rows(const Tensor& row, std::size_t n);
Tensor concat_rows(const std::vector<Tensor>& rows);
Tensor reshape(const Tensor& x, std::vector<std::size_t> shape);

// --- backward --------------------------------------------------------------

// Walks the DAG reachable from a scalar root. Node creation order is the
// topological order; backward visits each node exactly once, newest first.
// Leaf gradients accumulate additively across calls.
class Graph {
 public:
  explicit Graph(const Tensor& root);
  void backward();

 private:
  Tensor root_;
  std::vector<std::shared_ptr<Tensor::Impl>> order_;  // newest first
};

void backward(const Tensor& root);

// Max over all parameter elements of |analytic - central difference| /
// max(1, |analytic|). loss_fn must be deterministic and is re-invoked with
// perturbed parameter values; eps > 0.
double grad_check(const std::function<Tensor()>& loss_fn, const std::vector<Tensor>& params,
                  double eps);

}  // namespace stann::diff
