#pragma once

// Minimal dense tensor with reverse-mode differentiation. Doubles only,
// row-major storage, and exactly the op set the model needs (see ops.hpp).
// Ops build a DAG of nodes; backward() walks it in reverse topological
// order. Leaf gradients accumulate additively until explicitly zeroed;
// intermediate gradients are reset on every backward call.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mgnet/errors.hpp"

namespace mgnet::tk {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl;

struct Node {
  const char* op_name;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  // reads out.grad, accumulates into the inputs' grad buffers
  std::function<void(const TensorImpl& out)> backprop;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until first use
  std::shared_ptr<Node> node;

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  bool needs_grad() const { return requires_grad || node != nullptr; }
  std::vector<double>& grad_buffer();  // allocates zeros on demand
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::int64_t numel() const { return impl_->numel(); }
  std::int64_t dim(std::size_t i) const { return impl_->shape.at(i); }
  std::size_t ndim() const { return impl_->shape.size(); }

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  // gradient buffer; empty span when no gradient has been accumulated
  std::span<const double> grad() const { return impl_->grad; }
  void zero_grad();

  double item() const;

  std::shared_ptr<TensorImpl> impl() const { return impl_; }
  static Tensor wrap(std::shared_ptr<TensorImpl> impl);

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// named trainable tensor; names must be unique within a model
struct Parameter {
  std::string name;
  Tensor tensor;
};

// Accumulates gradients of the scalar loss into every reachable tensor that
// needs one. Repeated calls without zeroing accumulate additively into
// leaves.
void backward(const Tensor& loss);

// p <- p - lr * grad(p), then gradients are zeroed. Missing gradients are a
// contract error.
void sgd_step(std::span<Parameter> params, double lr);

// --- op construction helpers (used by ops.cpp and model-level custom ops) ---

// allocates an output tensor for an op
std::shared_ptr<TensorImpl> alloc_output(Shape shape);

// verifies finiteness of the op output, attaches the autodiff node when any
// input needs a gradient, and returns the tensor handle
Tensor finish_op(const char* op_name, std::shared_ptr<TensorImpl> out,
                 std::vector<std::shared_ptr<TensorImpl>> inputs,
                 std::function<void(const TensorImpl&)> backprop);

// g += contribution, allocating on demand; no-op when target does not need a
// gradient
void accumulate_grad(TensorImpl& target, std::span<const double> contribution);

}  // namespace mgnet::tk
