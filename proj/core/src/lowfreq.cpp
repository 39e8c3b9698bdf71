#include "lfm/lowfreq.hpp"

#include <string>

#include "lfm/layers.hpp"

namespace lfm {

Kernel lfm_kernel(const LfmConfig& cfg) {
  cfg.validate();
  return gaussian_kernel(cfg.m, cfg.normalization);
}

std::vector<std::size_t> lfm_output_shape(const std::vector<std::size_t>& input_shape,
                                          const LfmConfig& cfg) {
  if (input_shape.size() != 4) throw DimensionError("LFM expects a rank-4 shape");
  return {input_shape[0], input_shape[1], strided_extent(input_shape[2], cfg.stride),
          strided_extent(input_shape[3], cfg.stride)};
}

template <typename T>
BasicTensor<T> lfm_forward(const BasicTensor<T>& x, const Kernel& kernel, PaddingMode padding,
                           std::size_t stride) {
  require_rank4(x, "lfm_forward");
  check_convolution_args(x.h(), x.w(), kernel, padding, stride);
  BasicTensor<T> out({x.n(), x.c(), strided_extent(x.h(), stride), strided_extent(x.w(), stride)});
  for (std::size_t n = 0; n < x.n(); ++n) {
    for (std::size_t c = 0; c < x.c(); ++c) {
      correlate_plane<T>(x.plane(n, c), x.h(), x.w(), kernel, padding, stride, out.plane(n, c));
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> lfm_backward(const BasicTensor<T>& grad_out, const Kernel& kernel,
                            PaddingMode padding, std::size_t stride,
                            const std::vector<std::size_t>& input_shape) {
  if (input_shape.size() != 4) throw DimensionError("lfm_backward expects a rank-4 input shape");
  const std::vector<std::size_t> expected{input_shape[0], input_shape[1],
                                          strided_extent(input_shape[2], stride),
                                          strided_extent(input_shape[3], stride)};
  if (grad_out.shape() != expected) {
    throw DimensionError("lfm_backward: grad_out shape " +
                         BasicTensor<T>::shape_string(grad_out.shape()) + " does not match " +
                         BasicTensor<T>::shape_string(expected));
  }
  BasicTensor<T> dx(input_shape);
  for (std::size_t n = 0; n < input_shape[0]; ++n) {
    for (std::size_t c = 0; c < input_shape[1]; ++c) {
      correlate_plane_adjoint<T>(grad_out.plane(n, c), input_shape[2], input_shape[3], kernel,
                                 padding, stride, dx.plane(n, c));
    }
  }
  return dx;
}

namespace {

template <typename T>
void check_rsl_weights(const BasicTensor<T>& x, const BasicTensor<T>& w) {
  require_rank4(x, "rsl_block input");
  require_rank4(w, "rsl_block weight");
  if (w.h() != 1 || w.w() != 1) throw DimensionError("rsl_block expects 1x1 weights");
  if (w.c() != x.c()) {
    throw DimensionError("rsl_block channel mismatch: input has " + std::to_string(x.c()) +
                         ", weights expect " + std::to_string(w.c()));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> rsl_block_forward(const BasicTensor<T>& x, const BasicTensor<T>& w_1x1,
                                 const BasicTensor<T>& bias, const LfmConfig& cfg) {
  if (cfg.stride != 2) throw ArgumentError("rsl_block requires LFM stride 2");
  check_rsl_weights(x, w_1x1);
  return lfm_forward(conv2d_forward(x, w_1x1, bias, 1), cfg);
}

template <typename T>
RslGrads<T> rsl_block_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x,
                               const BasicTensor<T>& w_1x1, const LfmConfig& cfg) {
  if (cfg.stride != 2) throw ArgumentError("rsl_block requires LFM stride 2");
  check_rsl_weights(x, w_1x1);
  const std::vector<std::size_t> mixed_shape{x.n(), w_1x1.n(), x.h(), x.w()};
  const BasicTensor<T> d_mixed = lfm_backward(grad_out, cfg, mixed_shape);
  ConvGrads<T> g = conv2d_backward(d_mixed, x, w_1x1, 1);
  return {std::move(g.dx), std::move(g.dw), std::move(g.db)};
}

#define LFM_INSTANTIATE_LOWFREQ(T)                                                             \
  template BasicTensor<T> lfm_forward(const BasicTensor<T>&, const Kernel&, PaddingMode,       \
                                      std::size_t);                                            \
  template BasicTensor<T> lfm_backward(const BasicTensor<T>&, const Kernel&, PaddingMode,      \
                                       std::size_t, const std::vector<std::size_t>&);          \
  template BasicTensor<T> rsl_block_forward(const BasicTensor<T>&, const BasicTensor<T>&,      \
                                            const BasicTensor<T>&, const LfmConfig&);          \
  template RslGrads<T> rsl_block_backward(const BasicTensor<T>&, const BasicTensor<T>&,        \
                                          const BasicTensor<T>&, const LfmConfig&);

LFM_INSTANTIATE_LOWFREQ(float)
LFM_INSTANTIATE_LOWFREQ(double)

#undef LFM_INSTANTIATE_LOWFREQ

}  // namespace lfm
