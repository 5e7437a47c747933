#pragma once

// Differentiable ops over tk::Tensor. Layouts: images are NCHW, conv weights
// O x C x kh x kw, transposed-conv weights Cin x Cout x kh x kw (the adjoint
// pairing: a conv weight reused by transposed_conv2d maps conv outputs back
// to conv inputs).

#include <cstdint>
#include <vector>

#include "mgnet/tensor.hpp"

namespace mgnet::tk {

Tensor add(const Tensor& a, const Tensor& b);

// same-shape product, or [N,C] against [N,C,H,W] (channel vector broadcast
// over spatial sites)
Tensor elementwise_mul(const Tensor& a, const Tensor& b);

Tensor relu(const Tensor& x);

// non-overlapping window x window max pooling over NCHW
Tensor maxpool2d(const Tensor& x, int window = 2);

// cross-correlation; output side floor((H + 2p - k)/stride) + 1
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              int stride, int padding);

// adjoint of conv2d; output side (H-1)*stride - 2p + k + output_padding
Tensor transposed_conv2d(const Tensor& x, const Tensor& weight,
                         const Tensor& bias, int stride, int padding,
                         int output_padding = 0);

Tensor softmax(const Tensor& x, int axis);

// NCHW -> [N,C] per-channel spatial mean
Tensor global_avg_pool(const Tensor& x);

// x [N,F] with weight [O,F], bias [O] -> [N,O]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// mean of squared differences, scalar
Tensor mse_loss(const Tensor& pred, const Tensor& target);

// mean cross-entropy of logits [N,K] against integer labels, scalar
Tensor softmax_cross_entropy(const Tensor& logits,
                             const std::vector<std::int64_t>& labels);

Tensor sum(const Tensor& x);

// replicate [N,C] to [N,C,h,w]
Tensor broadcast_spatial(const Tensor& x, std::int64_t h, std::int64_t w);

}  // namespace mgnet::tk
