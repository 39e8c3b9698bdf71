#include "lfm/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lfm {

namespace {

template <typename T>
void check_conv_shapes(const BasicTensor<T>& x, const BasicTensor<T>& w, std::size_t stride) {
  require_rank4(x, "conv2d input");
  require_rank4(w, "conv2d weight");
  if (stride == 0) throw ArgumentError("conv2d stride must be >= 1");
  if (w.h() != w.w() || w.h() % 2 == 0) {
    throw DimensionError("conv2d weight must be square with odd size, got " +
                         BasicTensor<T>::shape_string(w.shape()));
  }
  if (w.c() != x.c()) {
    throw DimensionError("conv2d channel mismatch: input has " + std::to_string(x.c()) +
                         ", weight expects " + std::to_string(w.c()));
  }
}

// Output positions o with 0 <= o*stride + t - pad < n, as a half-open range.
struct Range {
  std::size_t lo;
  std::size_t hi;
};

Range valid_outputs(std::size_t out_n, std::size_t n, std::size_t stride, std::size_t t,
                    std::size_t pad) {
  // need o*stride >= pad - t  and  o*stride + t - pad <= n - 1
  std::size_t lo = 0;
  if (pad > t) lo = (pad - t + stride - 1) / stride;
  const long top = static_cast<long>(n) - 1 + static_cast<long>(pad) - static_cast<long>(t);
  if (top < 0) return {0, 0};
  std::size_t hi = static_cast<std::size_t>(top) / stride + 1;
  hi = std::min(hi, out_n);
  if (lo > hi) lo = hi;
  return {lo, hi};
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& b, std::size_t stride) {
  check_conv_shapes(x, w, stride);
  const std::size_t n = x.n(), c_in = x.c(), h = x.h(), wd = x.w();
  const std::size_t c_out = w.n(), k = w.h(), pad = k / 2;
  if (b.size() != c_out) throw DimensionError("conv2d bias length mismatch");
  const std::size_t oh = (h + stride - 1) / stride, ow = (wd + stride - 1) / stride;

  BasicTensor<T> out({n, c_out, oh, ow});
  for (std::size_t in = 0; in < n; ++in) {
    for (std::size_t co = 0; co < c_out; ++co) {
      T* dst = out.plane(in, co).data();
      std::fill(dst, dst + oh * ow, b[co]);
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const T* src = x.plane(in, ci).data();
        for (std::size_t ky = 0; ky < k; ++ky) {
          const Range ry = valid_outputs(oh, h, stride, ky, pad);
          for (std::size_t kx = 0; kx < k; ++kx) {
            const T wv = w.at(co, ci, ky, kx);
            const Range rx = valid_outputs(ow, wd, stride, kx, pad);
            for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
              const T* srow = src + (oy * stride + ky - pad) * wd;
              T* drow = dst + oy * ow;
              for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) {
                drow[ox] += wv * srow[ox * stride + kx - pad];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x,
                             const BasicTensor<T>& w, std::size_t stride) {
  check_conv_shapes(x, w, stride);
  const std::size_t n = x.n(), c_in = x.c(), h = x.h(), wd = x.w();
  const std::size_t c_out = w.n(), k = w.h(), pad = k / 2;
  const std::size_t oh = (h + stride - 1) / stride, ow = (wd + stride - 1) / stride;
  require_rank4(grad_out, "conv2d grad_out");
  if (grad_out.shape() != std::vector<std::size_t>{n, c_out, oh, ow}) {
    throw DimensionError("conv2d grad_out shape " + BasicTensor<T>::shape_string(grad_out.shape()) +
                         " does not match forward output");
  }

  ConvGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(w.shape()),
                 BasicTensor<T>({c_out})};
  for (std::size_t in = 0; in < n; ++in) {
    for (std::size_t co = 0; co < c_out; ++co) {
      const T* go = grad_out.plane(in, co).data();
      T bsum{0};
      for (std::size_t i = 0; i < oh * ow; ++i) bsum += go[i];
      g.db[co] += bsum;
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const T* src = x.plane(in, ci).data();
        T* dsrc = g.dx.plane(in, ci).data();
        for (std::size_t ky = 0; ky < k; ++ky) {
          const Range ry = valid_outputs(oh, h, stride, ky, pad);
          for (std::size_t kx = 0; kx < k; ++kx) {
            const Range rx = valid_outputs(ow, wd, stride, kx, pad);
            const T wv = w.at(co, ci, ky, kx);
            T wacc{0};
            for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
              const std::size_t row = (oy * stride + ky - pad) * wd;
              const T* grow = go + oy * ow;
              for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) {
                const std::size_t idx = row + ox * stride + kx - pad;
                wacc += grow[ox] * src[idx];
                dsrc[idx] += grow[ox] * wv;
              }
            }
            g.dw.at(co, ci, ky, kx) += wacc;
          }
        }
      }
    }
  }
  return g;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x) {
  BasicTensor<T> out = x;
  for (T& v : out.values()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x) {
  if (grad_out.shape() != x.shape()) throw DimensionError("relu_backward shape mismatch");
  BasicTensor<T> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T{0} ? grad_out[i] : T{0};
  return dx;
}

template <typename T>
BasicTensor<T> gap_forward(const BasicTensor<T>& x) {
  require_rank4(x, "gap input");
  const std::size_t hw = x.h() * x.w();
  if (hw == 0) throw DimensionError("global average pool over an empty plane");
  BasicTensor<T> out({x.n(), x.c()});
  for (std::size_t in = 0; in < x.n(); ++in) {
    for (std::size_t c = 0; c < x.c(); ++c) {
      T s{0};
      for (T v : x.plane(in, c)) s += v;
      out[in * x.c() + c] = s / static_cast<T>(hw);
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> gap_backward(const BasicTensor<T>& grad_out,
                            const std::vector<std::size_t>& input_shape) {
  if (input_shape.size() != 4 || grad_out.shape() != std::vector<std::size_t>{input_shape[0], input_shape[1]}) {
    throw DimensionError("gap_backward shape mismatch");
  }
  BasicTensor<T> dx(input_shape);
  const T inv = T{1} / static_cast<T>(input_shape[2] * input_shape[3]);
  for (std::size_t in = 0; in < input_shape[0]; ++in) {
    for (std::size_t c = 0; c < input_shape[1]; ++c) {
      const T g = grad_out[in * input_shape[1] + c] * inv;
      for (T& v : dx.plane(in, c)) v = g;
    }
  }
  return dx;
}

template <typename T>
BasicTensor<T> linear_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& b) {
  if (x.rank() != 2 || w.rank() != 2 || w.dim(1) != x.dim(1) || b.size() != w.dim(0)) {
    throw DimensionError("linear_forward shape mismatch: x " + BasicTensor<T>::shape_string(x.shape()) +
                         ", w " + BasicTensor<T>::shape_string(w.shape()));
  }
  const std::size_t n = x.dim(0), d = x.dim(1), k = w.dim(0);
  BasicTensor<T> out({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      T acc = b[j];
      for (std::size_t t = 0; t < d; ++t) acc += w[j * d + t] * x[i * d + t];
      out[i * k + j] = acc;
    }
  }
  return out;
}

template <typename T>
LinearGrads<T> linear_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x,
                               const BasicTensor<T>& w) {
  const std::size_t n = x.dim(0), d = x.dim(1), k = w.dim(0);
  if (grad_out.shape() != std::vector<std::size_t>{n, k}) {
    throw DimensionError("linear_backward grad_out shape mismatch");
  }
  LinearGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(w.shape()), BasicTensor<T>({k})};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const T go = grad_out[i * k + j];
      g.db[j] += go;
      for (std::size_t t = 0; t < d; ++t) {
        g.dw[j * d + t] += go * x[i * d + t];
        g.dx[i * d + t] += go * w[j * d + t];
      }
    }
  }
  return g;
}

namespace {

template <typename T>
void check_logits(const BasicTensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw DimensionError("softmax expects (N, K) logits");
  if (logits.dim(1) == 0) throw ArgumentError("softmax over an empty class set");
  if (labels.size() != logits.dim(0)) throw DimensionError("label count does not match batch");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= logits.dim(1)) {
      throw ArgumentError("label " + std::to_string(y) + " outside [0, " +
                          std::to_string(logits.dim(1)) + ")");
    }
  }
}

}  // namespace

template <typename T>
T softmax_ce_forward(const BasicTensor<T>& logits, std::span<const int> labels) {
  check_logits(logits, labels);
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (n == 0) throw ArgumentError("cross-entropy of an empty batch");
  T total{0};
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = logits.values().data() + i * k;
    const T mx = *std::max_element(row, row + k);
    T z{0};
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    total += std::log(z) + mx - row[labels[i]];
  }
  return total / static_cast<T>(n);
}

template <typename T>
BasicTensor<T> softmax_ce_backward(const BasicTensor<T>& logits, std::span<const int> labels) {
  check_logits(logits, labels);
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  BasicTensor<T> g(logits.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = logits.values().data() + i * k;
    const T mx = *std::max_element(row, row + k);
    T z{0};
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < k; ++j) {
      T p = std::exp(row[j] - mx) / z;
      if (static_cast<int>(j) == labels[i]) p -= T{1};
      g[i * k + j] = p / static_cast<T>(n);
    }
  }
  return g;
}

template <typename T>
std::vector<int> argmax_rows(const BasicTensor<T>& logits) {
  if (logits.rank() != 2) throw DimensionError("argmax expects (N, K) logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = logits.values().data() + i * k;
    out[i] = static_cast<int>(std::max_element(row, row + k) - row);
  }
  return out;
}

#define LFM_INSTANTIATE_LAYERS(T)                                                                \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                         const BasicTensor<T>&, std::size_t);                     \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,            \
                                        const BasicTensor<T>&, std::size_t);                      \
  template BasicTensor<T> relu_forward(const BasicTensor<T>&);                                   \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);           \
  template BasicTensor<T> gap_forward(const BasicTensor<T>&);                                    \
  template BasicTensor<T> gap_backward(const BasicTensor<T>&, const std::vector<std::size_t>&);  \
  template BasicTensor<T> linear_forward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                         const BasicTensor<T>&);                                  \
  template LinearGrads<T> linear_backward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                          const BasicTensor<T>&);                                 \
  template T softmax_ce_forward(const BasicTensor<T>&, std::span<const int>);                    \
  template BasicTensor<T> softmax_ce_backward(const BasicTensor<T>&, std::span<const int>);      \
  template std::vector<int> argmax_rows(const BasicTensor<T>&);

LFM_INSTANTIATE_LAYERS(float)
LFM_INSTANTIATE_LAYERS(double)

#undef LFM_INSTANTIATE_LAYERS

}  // namespace lfm
