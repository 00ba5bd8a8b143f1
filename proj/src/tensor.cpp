#include "stann/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

namespace stann::diff {

namespace {

std::uint64_t next_node_id() {
  thread_local std::uint64_t counter = 0;
  return ++counter;
}

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void check_finite(const std::vector<double>& v, const char* where) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in ") + where);
  }
}

#ifndef NDEBUG
constexpr bool kDebugChecks = true;
#else
constexpr bool kDebugChecks = false;
#endif

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

struct Tensor::Impl {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // sized lazily on first backward touch
  bool requires_grad = false;
  std::uint64_t id = 0;
  std::vector<std::shared_ptr<Impl>> parents;
  // Pulls this node's grad into the parents' grads.
  std::function<void(Impl&)> backprop;

  std::vector<double>& grad_buf() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
  bool wants_grad() const { return requires_grad || !parents.empty(); }
};

namespace {

std::shared_ptr<Tensor::Impl> make_impl(std::vector<std::size_t> shape, std::vector<double> data,
                                        bool requires_grad) {
  auto impl = std::make_shared<Tensor::Impl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  impl->id = next_node_id();
  return impl;
}

// Result node of an op: keeps a parent edge only when gradient can flow.
Tensor make_result(std::vector<std::size_t> shape, std::vector<double> data,
                   std::vector<Tensor> parents, std::function<void(Tensor::Impl&)> backprop) {
  if (kDebugChecks) check_finite(data, "op result");
  auto impl = make_impl(std::move(shape), std::move(data), false);
  bool any_grad = false;
  for (const auto& p : parents) {
    if (p.impl()->wants_grad()) any_grad = true;
  }
  if (any_grad) {
    impl->parents.reserve(parents.size());
    for (auto& p : parents) impl->parents.push_back(p.impl());
    impl->backprop = std::move(backprop);
  }
  return Tensor(std::move(impl));
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  std::size_t n = shape_size(shape);
  return Tensor(make_impl(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value, bool requires_grad) {
  if (!std::isfinite(value)) throw NumericError("tensor fill value is not finite");
  std::size_t n = shape_size(shape);
  return Tensor(make_impl(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return full({1}, value, requires_grad);
}

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> data,
                         bool requires_grad) {
  if (shape_size(shape) != data.size()) {
    throw std::invalid_argument("tensor data length does not match shape");
  }
  check_finite(data, "tensor creation");
  return Tensor(make_impl(std::move(shape), std::move(data), requires_grad));
}

const std::vector<std::size_t>& Tensor::shape() const { return d_->shape; }
std::size_t Tensor::size() const { return d_->data.size(); }

std::size_t Tensor::rows() const { return d_->shape.empty() ? 1 : d_->shape[0]; }

std::size_t Tensor::cols() const {
  std::size_t c = 1;
  for (std::size_t i = 1; i < d_->shape.size(); ++i) c *= d_->shape[i];
  return c;
}

double Tensor::value() const {
  if (size() != 1) throw std::invalid_argument("value() requires a 1-element tensor");
  return d_->data[0];
}

std::span<const double> Tensor::data() const { return d_->data; }
std::span<double> Tensor::mutable_data() { return d_->data; }

std::span<const double> Tensor::grad() const {
  return d_->grad_buf();
}

bool Tensor::requires_grad() const { return d_->requires_grad; }

void Tensor::zero_grad() { d_->grad.assign(d_->data.size(), 0.0); }

std::uint64_t Tensor::node_id() const { return d_->id; }

// --- ops ---------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2) {
    throw std::invalid_argument("matmul expects rank-2 tensors");
  }
  const std::size_t p = a.shape()[0], q = a.shape()[1];
  const std::size_t q2 = b.shape()[0], r = b.shape()[1];
  if (q != q2) throw std::invalid_argument("matmul inner dimensions differ");

  std::vector<double> out(p * r, 0.0);
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = ad[i * q + k];
      if (aik == 0.0) continue;
      const double* brow = &bd[k * r];
      double* orow = &out[i * r];
      for (std::size_t j = 0; j < r; ++j) orow[j] += aik * brow[j];
    }
  }
  auto ai = a.impl();
  auto bi = b.impl();
  return make_result(
      {p, r}, std::move(out), {a, b}, [ai, bi, p, q, r](Tensor::Impl& self) {
        const auto& g = self.grad;
        if (ai->wants_grad()) {
          auto& ga = ai->grad_buf();
          const auto& bd = bi->data;
          // dL/da = g . b^T
          for (std::size_t i = 0; i < p; ++i)
            for (std::size_t k = 0; k < q; ++k) {
              double acc = 0.0;
              for (std::size_t j = 0; j < r; ++j) acc += g[i * r + j] * bd[k * r + j];
              ga[i * q + k] += acc;
            }
        }
        if (bi->wants_grad()) {
          auto& gb = bi->grad_buf();
          const auto& ad = ai->data;
          // dL/db = a^T . g
          for (std::size_t k = 0; k < q; ++k)
            for (std::size_t i = 0; i < p; ++i) {
              const double aik = ad[i * q + k];
              if (aik == 0.0) continue;
              for (std::size_t j = 0; j < r; ++j) gb[k * r + j] += aik * g[i * r + j];
            }
        }
      });
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  auto ai = a.impl();
  auto bi = b.impl();
  return make_result(a.shape(), std::move(out), {a, b}, [ai, bi](Tensor::Impl& self) {
    if (ai->wants_grad()) {
      auto& ga = ai->grad_buf();
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
    }
    if (bi->wants_grad()) {
      auto& gb = bi->grad_buf();
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  auto ai = a.impl();
  auto bi = b.impl();
  return make_result(a.shape(), std::move(out), {a, b}, [ai, bi](Tensor::Impl& self) {
    if (ai->wants_grad()) {
      auto& ga = ai->grad_buf();
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
    }
    if (bi->wants_grad()) {
      auto& gb = bi->grad_buf();
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  auto ai = a.impl();
  auto bi = b.impl();
  return make_result(a.shape(), std::move(out), {a, b}, [ai, bi](Tensor::Impl& self) {
    if (ai->wants_grad()) {
      auto& ga = ai->grad_buf();
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * bi->data[i];
    }
    if (bi->wants_grad()) {
      auto& gb = bi->grad_buf();
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb[i] += self.grad[i] * ai->data[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  if (!std::isfinite(s)) throw NumericError("scale factor is not finite");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * s;
  auto ai = a.impl();
  return make_result(a.shape(), std::move(out), {a}, [ai, s](Tensor::Impl& self) {
    if (!ai->wants_grad()) return;
    auto& ga = ai->grad_buf();
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * s;
  });
}

Tensor scale(const Tensor& a, const Tensor& s) {
  if (s.size() != 1) throw std::invalid_argument("scale: scaling tensor must have one element");
  const double sv = s.data()[0];
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * sv;
  auto ai = a.impl();
  auto si = s.impl();
  return make_result(a.shape(), std::move(out), {a, s}, [ai, si, sv](Tensor::Impl& self) {
    if (ai->wants_grad()) {
      auto& ga = ai->grad_buf();
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * sv;
    }
    if (si->wants_grad()) {
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * ai->data[i];
      si->grad_buf()[0] += acc;
    }
  });
}

Activation activation_from_string(const std::string& name) {
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw UsageError("unknown activation: " + name);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
  }
  return "identity";
}

Tensor activation(Activation kind, const Tensor& x) {
  if (kind == Activation::kIdentity) return x;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x.data()[i];
    switch (kind) {
      case Activation::kSigmoid: out[i] = stable_sigmoid(v); break;
      case Activation::kTanh: out[i] = std::tanh(v); break;
      case Activation::kRelu: out[i] = v > 0.0 ? v : 0.0; break;
      case Activation::kIdentity: out[i] = v; break;
    }
  }
  auto xi = x.impl();
  return make_result(x.shape(), std::move(out), {x}, [xi, kind](Tensor::Impl& self) {
    if (!xi->wants_grad()) return;
    auto& gx = xi->grad_buf();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      double d = 1.0;
      const double y = self.data[i];
      switch (kind) {
        case Activation::kSigmoid: d = y * (1.0 - y); break;
        case Activation::kTanh: d = 1.0 - y * y; break;
        case Activation::kRelu: d = xi->data[i] > 0.0 ? 1.0 : 0.0; break;
        case Activation::kIdentity: d = 1.0; break;
      }
      gx[i] += self.grad[i] * d;
    }
  });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::min(std::max(x.data()[i], lo), hi);
  }
  auto xi = x.impl();
  return make_result(x.shape(), std::move(out), {x}, [xi, lo, hi](Tensor::Impl& self) {
    if (!xi->wants_grad()) return;
    auto& gx = xi->grad_buf();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double v = xi->data[i];
      if (v > lo && v < hi) gx[i] += self.grad[i];
    }
  });
}

Tensor reduce(Reduction kind, const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) {
    switch (kind) {
      case Reduction::kSum:
      case Reduction::kMean: acc += v; break;
      case Reduction::kSqL2: acc += v * v; break;
      case Reduction::kL1: acc += std::abs(v); break;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(x.size());
  if (kind == Reduction::kMean) acc *= inv_n;
  auto xi = x.impl();
  return make_result({1}, {acc}, {x}, [xi, kind, inv_n](Tensor::Impl& self) {
    if (!xi->wants_grad()) return;
    auto& gx = xi->grad_buf();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double v = xi->data[i];
      double d = 1.0;
      switch (kind) {
        case Reduction::kSum: d = 1.0; break;
        case Reduction::kMean: d = inv_n; break;
        case Reduction::kSqL2: d = 2.0 * v; break;
        case Reduction::kL1: d = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); break;
      }
      gx[i] += g * d;
    }
  });
}

Tensor select_row(const Tensor& x, std::size_t i) {
  if (x.shape().empty()) throw std::invalid_argument("select_row: tensor has no axes");
  const std::size_t n = x.shape()[0];
  if (i >= n) throw std::invalid_argument("select_row: index out of range");
  const std::size_t stride = x.size() / n;
  std::vector<std::size_t> out_shape(x.shape().begin() + 1, x.shape().end());
  if (out_shape.empty()) out_shape = {1};
  std::vector<double> out(x.data().begin() + i * stride, x.data().begin() + (i + 1) * stride);
  auto xi = x.impl();
  return make_result(std::move(out_shape), std::move(out), {x},
                     [xi, i, stride](Tensor::Impl& self) {
                       if (!xi->wants_grad()) return;
                       auto& gx = xi->grad_buf();
                       for (std::size_t j = 0; j < stride; ++j) gx[i * stride + j] += self.grad[j];
                     });
}

Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1) {
  if (x.shape().empty()) throw std::invalid_argument("slice_rows: tensor has no axes");
  const std::size_t n = x.shape()[0];
  if (r0 > r1 || r1 > n) throw std::invalid_argument("slice_rows: bad row range");
  const std::size_t stride = x.size() / n;
  std::vector<std::size_t> out_shape = x.shape();
  out_shape[0] = r1 - r0;
  std::vector<double> out(x.data().begin() + r0 * stride, x.data().begin() + r1 * stride);
  auto xi = x.impl();
  return make_result(std::move(out_shape), std::move(out), {x},
                     [xi, r0, stride](Tensor::Impl& self) {
                       if (!xi->wants_grad()) return;
                       auto& gx = xi->grad_buf();
                       for (std::size_t j = 0; j < self.grad.size(); ++j)
                         gx[r0 * stride + j] += self.grad[j];
                     });
}

Tensor repeat_rows(const Tensor& row, std::size_t n) {
  if (row.shape().size() != 2 || row.shape()[0] != 1) {
    throw std::invalid_argument("repeat_rows expects a 1xq row");
  }
  const std::size_t q = row.shape()[1];
  std::vector<double> out(n * q);
  for (std::size_t i = 0; i < n; ++i)
    std::copy(row.data().begin(), row.data().end(), out.begin() + i * q);
  auto ri = row.impl();
  return make_result({n, q}, std::move(out), {row}, [ri, n, q](Tensor::Impl& self) {
    if (!ri->wants_grad()) return;
    auto& gr = ri->grad_buf();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < q; ++j) gr[j] += self.grad[i * q + j];
  });
}

Tensor concat_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw std::invalid_argument("concat_rows: empty input");
  std::size_t total_rows = 0;
  const std::size_t width = rows[0].cols();
  for (const auto& r : rows) {
    if (r.shape().size() != 2 || r.cols() != width) {
      throw std::invalid_argument("concat_rows: inconsistent widths");
    }
    total_rows += r.rows();
  }
  std::vector<double> out;
  out.reserve(total_rows * width);
  for (const auto& r : rows) out.insert(out.end(), r.data().begin(), r.data().end());

  std::vector<std::shared_ptr<Tensor::Impl>> parents;
  parents.reserve(rows.size());
  for (const auto& r : rows) parents.push_back(r.impl());
  return make_result({total_rows, width}, std::move(out), rows,
                     [parents](Tensor::Impl& self) {
                       std::size_t off = 0;
                       for (const auto& p : parents) {
                         const std::size_t sz = p->data.size();
                         if (p->wants_grad()) {
                           auto& gp = p->grad_buf();
                           for (std::size_t j = 0; j < sz; ++j) gp[j] += self.grad[off + j];
                         }
                         off += sz;
                       }
                     });
}

Tensor reshape(const Tensor& x, std::vector<std::size_t> shape) {
  if (shape_size(shape) != x.size()) throw std::invalid_argument("reshape: size mismatch");
  std::vector<double> out(x.data().begin(), x.data().end());
  auto xi = x.impl();
  return make_result(std::move(shape), std::move(out), {x}, [xi](Tensor::Impl& self) {
    if (!xi->wants_grad()) return;
    auto& gx = xi->grad_buf();
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
}

// --- backward ----------------------------------------------------------------

Graph::Graph(const Tensor& root) : root_(root) {
  if (!root.defined() || root.size() != 1) {
    throw std::invalid_argument("backward requires a scalar root");
  }
  // Collect the reachable sub-DAG; creation ids give the topological order.
  std::unordered_set<Tensor::Impl*> seen;
  std::vector<std::shared_ptr<Tensor::Impl>> stack{root.impl()};
  seen.insert(root.impl().get());
  while (!stack.empty()) {
    auto node = std::move(stack.back());
    stack.pop_back();
    for (const auto& p : node->parents) {
      if (seen.insert(p.get()).second) stack.push_back(p);
    }
    order_.push_back(std::move(node));
  }
  std::sort(order_.begin(), order_.end(),
            [](const auto& a, const auto& b) { return a->id > b->id; });
}

void Graph::backward() {
  auto root_impl = root_.impl();
  root_impl->grad_buf()[0] += 1.0;
  for (const auto& node : order_) {
    if (node->backprop) node->backprop(*node);
  }
}

void backward(const Tensor& root) {
  Graph g(root);
  g.backward();
}

double grad_check(const std::function<Tensor()>& loss_fn, const std::vector<Tensor>& params,
                  double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: invalid epsilon");

  Tensor loss = loss_fn();
  if (!std::isfinite(loss.value())) throw NumericError("grad_check: non-finite loss");
  for (auto p : params) p.zero_grad();
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.emplace_back(p.grad().begin(), p.grad().end());

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi];
    auto vals = p.mutable_data();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + eps;
      const double up = loss_fn().value();
      vals[i] = saved - eps;
      const double dn = loss_fn().value();
      vals[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(dn)) {
        throw NumericError("grad_check: non-finite loss under perturbation");
      }
      const double numeric = (up - dn) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace stann::diff
