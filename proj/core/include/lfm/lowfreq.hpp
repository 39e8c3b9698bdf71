#pragma once

#include <cstddef>
#include <vector>

#include "lfm/filters.hpp"
#include "lfm/model_spec.hpp"
#include "lfm/tensor.hpp"

namespace lfm {

// The low-frequency module: a fixed Gaussian applied to every (n, c) plane of
// a feature tensor. It has no learnable parameters.

/// Kernel used by an LFM with this configuration.
Kernel lfm_kernel(const LfmConfig& cfg);

/// Output shape (N, C, ceil(H/s), ceil(W/s)).
std::vector<std::size_t> lfm_output_shape(const std::vector<std::size_t>& input_shape,
                                          const LfmConfig& cfg);

template <typename T>
BasicTensor<T> lfm_forward(const BasicTensor<T>& x, const Kernel& kernel, PaddingMode padding,
                           std::size_t stride);

template <typename T>
BasicTensor<T> lfm_forward(const BasicTensor<T>& x, const LfmConfig& cfg) {
  cfg.validate();
  return lfm_forward(x, lfm_kernel(cfg), cfg.padding, cfg.stride);
}

/// dL/dx for the forward map; the exact adjoint under every padding mode and stride.
template <typename T>
BasicTensor<T> lfm_backward(const BasicTensor<T>& grad_out, const Kernel& kernel,
                            PaddingMode padding, std::size_t stride,
                            const std::vector<std::size_t>& input_shape);

template <typename T>
BasicTensor<T> lfm_backward(const BasicTensor<T>& grad_out, const LfmConfig& cfg,
                            const std::vector<std::size_t>& input_shape) {
  cfg.validate();
  return lfm_backward(grad_out, lfm_kernel(cfg), cfg.padding, cfg.stride, input_shape);
}

/// RSL block: learnable 1x1 convolution (weights (C_out, C_in, 1, 1), bias C_out)
/// followed by the LFM at stride 2.
template <typename T>
BasicTensor<T> rsl_block_forward(const BasicTensor<T>& x, const BasicTensor<T>& w_1x1,
                                 const BasicTensor<T>& bias, const LfmConfig& cfg);

template <typename T>
struct RslGrads {
  BasicTensor<T> dx;
  BasicTensor<T> dw;
  BasicTensor<T> db;
};

template <typename T>
RslGrads<T> rsl_block_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x,
                               const BasicTensor<T>& w_1x1, const LfmConfig& cfg);

}  // namespace lfm
