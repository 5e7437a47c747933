#include "mgnet/tensor.hpp"

#include <cmath>
#include <unordered_set>

#include "mgnet/kernels.hpp"

namespace mgnet::tk {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) {
    if (d <= 0) throw ShapeError("shape dimensions must be positive");
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::vector<double>& TensorImpl::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  const std::int64_t n = shape_numel(shape);
  impl->shape = std::move(shape);
  impl->data.assign(static_cast<std::size_t>(n), value);
  impl->requires_grad = requires_grad;
  return wrap(std::move(impl));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data,
                         bool requires_grad) {
  const std::int64_t n = shape_numel(shape);
  if (n != static_cast<std::int64_t>(data.size()))
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return wrap(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

Tensor Tensor::wrap(std::shared_ptr<TensorImpl> impl) {
  Tensor t;
  t.impl_ = std::move(impl);
  return t;
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1)
    throw ContractError("item() requires a scalar tensor, got shape " +
                        shape_str(impl_->shape));
  return impl_->data[0];
}

std::shared_ptr<TensorImpl> alloc_output(Shape shape) {
  auto impl = std::make_shared<TensorImpl>();
  const std::int64_t n = shape_numel(shape);
  impl->shape = std::move(shape);
  impl->data.assign(static_cast<std::size_t>(n), 0.0);
  return impl;
}

Tensor finish_op(const char* op_name, std::shared_ptr<TensorImpl> out,
                 std::vector<std::shared_ptr<TensorImpl>> inputs,
                 std::function<void(const TensorImpl&)> backprop) {
  for (double v : out->data)
    if (!std::isfinite(v))
      throw NumericError(std::string(op_name) + " produced a non-finite value");

  bool any_grad = false;
  for (const auto& in : inputs)
    if (in && in->needs_grad()) any_grad = true;
  if (any_grad) {
    auto node = std::make_shared<Node>();
    node->op_name = op_name;
    node->inputs = std::move(inputs);
    node->backprop = std::move(backprop);
    out->node = std::move(node);
  }
  return Tensor::wrap(std::move(out));
}

void accumulate_grad(TensorImpl& target, std::span<const double> contribution) {
  if (!target.needs_grad()) return;
  auto& g = target.grad_buffer();
  kern::vadd(g.data(), contribution.data(), g.data(), g.size());
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw ContractError("backward on an empty tensor");
  auto root = loss.impl();
  if (root->numel() != 1)
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_str(root->shape));

  // post-order over the DAG, consumers after producers
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> visited;
  std::vector<std::pair<TensorImpl*, std::size_t>> stack{{root.get(), 0}};
  while (!stack.empty()) {
    auto& [impl, next] = stack.back();
    if (next == 0 && visited.count(impl)) {
      stack.pop_back();
      continue;
    }
    visited.insert(impl);
    if (impl->node && next < impl->node->inputs.size()) {
      TensorImpl* child = impl->node->inputs[next++].get();
      if (child && !visited.count(child)) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(impl);
    stack.pop_back();
  }

  // fresh gradients for interior nodes; leaves keep accumulating
  for (TensorImpl* impl : order)
    if (impl->node) impl->grad.assign(impl->data.size(), 0.0);

  if (root->node)
    root->grad[0] = 1.0;
  else if (root->requires_grad)
    root->grad_buffer()[0] += 1.0;
  else
    return;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* impl = *it;
    if (impl->node && !impl->grad.empty()) impl->node->backprop(*impl);
  }
}

void sgd_step(std::span<Parameter> params, double lr) {
  for (Parameter& p : params) {
    auto impl = p.tensor.impl();
    if (impl->grad.empty())
      throw ContractError("parameter '" + p.name + "' has no gradient");
    kern::axpy(-lr, impl->grad.data(), impl->data.data(), impl->data.size());
    std::fill(impl->grad.begin(), impl->grad.end(), 0.0);
  }
}

}  // namespace mgnet::tk
