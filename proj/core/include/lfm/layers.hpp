#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lfm/tensor.hpp"

namespace lfm {

// Dense CNN layers over (N, C, H, W) tensors. Every backward is the exact
// gradient of its forward.

/// out[n, co] = b[co] + sum_ci w[co, ci] (*) x[n, ci], weights (C_out, C_in, k, k),
/// zero padding k/2, outputs sampled at (i*stride, j*stride).
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& b, std::size_t stride);

template <typename T>
struct ConvGrads {
  BasicTensor<T> dx;
  BasicTensor<T> dw;
  BasicTensor<T> db;
};

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x,
                             const BasicTensor<T>& w, std::size_t stride);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x);

/// Gradient passes where the forward input was strictly positive.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x);

/// (N, C, H, W) -> (N, C) plane means.
template <typename T>
BasicTensor<T> gap_forward(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> gap_backward(const BasicTensor<T>& grad_out, const std::vector<std::size_t>& input_shape);

/// (N, D) x (K, D)^T + b -> (N, K).
template <typename T>
BasicTensor<T> linear_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& b);

template <typename T>
struct LinearGrads {
  BasicTensor<T> dx;
  BasicTensor<T> dw;
  BasicTensor<T> db;
};

template <typename T>
LinearGrads<T> linear_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x,
                               const BasicTensor<T>& w);

/// Mean cross-entropy of softmax(logits) against integer labels.
template <typename T>
T softmax_ce_forward(const BasicTensor<T>& logits, std::span<const int> labels);

/// d(mean CE)/d(logits) = (softmax - onehot) / N.
template <typename T>
BasicTensor<T> softmax_ce_backward(const BasicTensor<T>& logits, std::span<const int> labels);

/// Row-wise argmax of (N, K) logits; ties go to the lowest index.
template <typename T>
std::vector<int> argmax_rows(const BasicTensor<T>& logits);

}  // namespace lfm
