#include "trajgan/nn/ops.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace trajgan::nn {

namespace {

template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
  T acc = T{0};
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
inline void axpy(T alpha, const T* x, T* y, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

[[noreturn]] void shape_error(const std::string& what) { throw std::invalid_argument(what); }

template <typename T>
void check_rank(const Tensor<T>& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) shape_error(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " + to_string(t.shape()));
}

// Input position feeding output o through tap k, or -1 when it falls in padding.
inline std::ptrdiff_t tap(const ConvGeometry& g, std::size_t o, std::size_t k) {
  const auto i = static_cast<std::ptrdiff_t>(o * g.stride + k) - static_cast<std::ptrdiff_t>(g.pad_left);
  return (i < 0 || i >= static_cast<std::ptrdiff_t>(g.in_len)) ? -1 : i;
}

// Shared core: for every (o, k) pair, long[i] (C_long channels) and
// short[o] (C_short channels) are linked by w[k] of shape [C_long, C_short].
// conv1d: long = input x, short = output. frac_conv1d: long = output, short = input y.
template <typename T>
void accumulate_long_to_short(const T* lng, const T* w, T* shrt, const ConvGeometry& g, std::size_t batch,
                              std::size_t c_long, std::size_t c_short) {
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < g.out_len; ++o) {
      T* s = shrt + (b * g.out_len + o) * c_short;
      for (std::size_t k = 0; k < g.kernel; ++k) {
        const auto i = tap(g, o, k);
        if (i < 0) continue;
        const T* l = lng + (b * g.in_len + static_cast<std::size_t>(i)) * c_long;
        const T* wk = w + k * c_long * c_short;
        for (std::size_t cl = 0; cl < c_long; ++cl) axpy(l[cl], wk + cl * c_short, s, c_short);
      }
    }
  }
}

template <typename T>
void accumulate_short_to_long(const T* shrt, const T* w, T* lng, const ConvGeometry& g, std::size_t batch,
                              std::size_t c_long, std::size_t c_short) {
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < g.out_len; ++o) {
      const T* s = shrt + (b * g.out_len + o) * c_short;
      for (std::size_t k = 0; k < g.kernel; ++k) {
        const auto i = tap(g, o, k);
        if (i < 0) continue;
        T* l = lng + (b * g.in_len + static_cast<std::size_t>(i)) * c_long;
        const T* wk = w + k * c_long * c_short;
        for (std::size_t cl = 0; cl < c_long; ++cl) l[cl] += dot(wk + cl * c_short, s, c_short);
      }
    }
  }
}

template <typename T>
void accumulate_weight_grad(const T* lng, const T* shrt, T* gw, const ConvGeometry& g, std::size_t batch,
                            std::size_t c_long, std::size_t c_short) {
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < g.out_len; ++o) {
      const T* s = shrt + (b * g.out_len + o) * c_short;
      for (std::size_t k = 0; k < g.kernel; ++k) {
        const auto i = tap(g, o, k);
        if (i < 0) continue;
        const T* l = lng + (b * g.in_len + static_cast<std::size_t>(i)) * c_long;
        T* gk = gw + k * c_long * c_short;
        for (std::size_t cl = 0; cl < c_long; ++cl) axpy(l[cl], s, gk + cl * c_short, c_short);
      }
    }
  }
}

template <typename T>
void accumulate_bias_grad(const T* grad, T* gb, std::size_t rows, std::size_t channels) {
  for (std::size_t r = 0; r < rows; ++r) axpy(T{1}, grad + r * channels, gb, channels);
}

template <typename T>
void check_conv_weights(const Tensor<T>& w, const Tensor<T>& b, std::size_t c_long, std::size_t c_short,
                        std::size_t bias_len, const char* what) {
  check_rank(w, 3, what);
  if (w.dim(1) != c_long || w.dim(2) != c_short) {
    shape_error(std::string(what) + ": weight shape " + to_string(w.shape()) + " incompatible with channels");
  }
  if (b.size() != 0 && b.size() != bias_len) shape_error(std::string(what) + ": bias length mismatch");
}

}  // namespace

ConvGeometry same_ceil_geometry(std::size_t in_len, std::size_t kernel, std::size_t stride) {
  if (in_len == 0 || kernel == 0 || stride == 0) shape_error("conv geometry needs positive length, kernel and stride");
  ConvGeometry g;
  g.in_len = in_len;
  g.kernel = kernel;
  g.stride = stride;
  g.out_len = (in_len + stride - 1) / stride;
  const std::size_t span = (g.out_len - 1) * stride + kernel;
  const std::size_t pad_total = span > in_len ? span - in_len : 0;
  g.pad_left = pad_total / 2;
  g.pad_right = pad_total - g.pad_left;
  return g;
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, std::size_t stride) {
  check_rank(x, 3, "conv1d input");
  const std::size_t batch = x.dim(0), c_in = x.dim(2);
  check_rank(w, 3, "conv1d weight");
  const std::size_t c_out = w.dim(2);
  check_conv_weights(w, b, c_in, c_out, c_out, "conv1d");
  const ConvGeometry g = same_ceil_geometry(x.dim(1), w.dim(0), stride);
  Tensor<T> out({batch, g.out_len, c_out});
  if (b.size() != 0) {
    for (std::size_t r = 0; r < batch * g.out_len; ++r) std::copy(b.ptr(), b.ptr() + c_out, out.ptr() + r * c_out);
  }
  accumulate_long_to_short(x.ptr(), w.ptr(), out.ptr(), g, batch, c_in, c_out);
  return out;
}

template <typename T>
Tensor<T> conv1d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out, std::size_t stride,
                          T* grad_w, T* grad_b) {
  const std::size_t batch = x.dim(0), c_in = x.dim(2), c_out = w.dim(2);
  const ConvGeometry g = same_ceil_geometry(x.dim(1), w.dim(0), stride);
  if (grad_out.shape() != Shape{batch, g.out_len, c_out}) shape_error("conv1d_backward: grad shape mismatch");
  Tensor<T> gx(x.shape());
  accumulate_short_to_long(grad_out.ptr(), w.ptr(), gx.ptr(), g, batch, c_in, c_out);
  if (grad_w) accumulate_weight_grad(x.ptr(), grad_out.ptr(), grad_w, g, batch, c_in, c_out);
  if (grad_b) accumulate_bias_grad(grad_out.ptr(), grad_b, batch * g.out_len, c_out);
  return gx;
}

template <typename T>
Tensor<T> frac_conv1d(const Tensor<T>& y, const Tensor<T>& w, const Tensor<T>& b, std::size_t stride,
                      std::size_t target_len) {
  check_rank(y, 3, "frac_conv1d input");
  const std::size_t batch = y.dim(0), c_short = y.dim(2);
  check_rank(w, 3, "frac_conv1d weight");
  const std::size_t c_long = w.dim(1);
  check_conv_weights(w, b, c_long, c_short, c_long, "frac_conv1d");
  const ConvGeometry g = same_ceil_geometry(target_len, w.dim(0), stride);
  if (g.out_len != y.dim(1)) {
    shape_error("frac_conv1d: target length " + std::to_string(target_len) + " incompatible with input length " +
                std::to_string(y.dim(1)) + " at stride " + std::to_string(stride));
  }
  Tensor<T> out({batch, target_len, c_long});
  if (b.size() != 0) {
    for (std::size_t r = 0; r < batch * target_len; ++r) std::copy(b.ptr(), b.ptr() + c_long, out.ptr() + r * c_long);
  }
  accumulate_short_to_long(y.ptr(), w.ptr(), out.ptr(), g, batch, c_long, c_short);
  return out;
}

template <typename T>
Tensor<T> frac_conv1d_backward(const Tensor<T>& y, const Tensor<T>& w, const Tensor<T>& grad_out, std::size_t stride,
                               T* grad_w, T* grad_b) {
  const std::size_t batch = y.dim(0), c_short = y.dim(2), c_long = w.dim(1);
  const std::size_t target_len = grad_out.dim(1);
  const ConvGeometry g = same_ceil_geometry(target_len, w.dim(0), stride);
  if (grad_out.shape() != Shape{batch, target_len, c_long} || g.out_len != y.dim(1)) {
    shape_error("frac_conv1d_backward: grad shape mismatch");
  }
  Tensor<T> gy(y.shape());
  accumulate_long_to_short(grad_out.ptr(), w.ptr(), gy.ptr(), g, batch, c_long, c_short);
  if (grad_w) accumulate_weight_grad(grad_out.ptr(), y.ptr(), grad_w, g, batch, c_long, c_short);
  if (grad_b) accumulate_bias_grad(grad_out.ptr(), grad_b, batch * target_len, c_long);
  return gy;
}

template <typename T>
Tensor<T> maxpool1d(const Tensor<T>& x, std::size_t window, std::size_t stride, std::vector<std::size_t>* argmax) {
  check_rank(x, 3, "maxpool1d input");
  const std::size_t batch = x.dim(0), channels = x.dim(2);
  const ConvGeometry g = same_ceil_geometry(x.dim(1), window, stride);
  Tensor<T> out({batch, g.out_len, channels}, -std::numeric_limits<T>::infinity());
  if (argmax) argmax->assign(out.size(), std::numeric_limits<std::size_t>::max());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < g.out_len; ++o) {
      const std::size_t out_row = (b * g.out_len + o) * channels;
      for (std::size_t k = 0; k < window; ++k) {
        const auto i = tap(g, o, k);
        if (i < 0) continue;
        const std::size_t in_row = (b * g.in_len + static_cast<std::size_t>(i)) * channels;
        for (std::size_t c = 0; c < channels; ++c) {
          const T v = x[in_row + c];
          if (v > out[out_row + c]) {
            out[out_row + c] = v;
            if (argmax) (*argmax)[out_row + c] = in_row + c;
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  check_rank(x, 2, "dense input");
  check_rank(w, 2, "dense weight");
  const std::size_t batch = x.dim(0), n = x.dim(1), m = w.dim(1);
  if (w.dim(0) != n) shape_error("dense: input width " + std::to_string(n) + " vs weight " + to_string(w.shape()));
  if (b.size() != 0 && b.size() != m) shape_error("dense: bias length mismatch");
  Tensor<T> out({batch, m});
  for (std::size_t r = 0; r < batch; ++r) {
    T* o = out.ptr() + r * m;
    if (b.size() != 0) std::copy(b.ptr(), b.ptr() + m, o);
    const T* xr = x.ptr() + r * n;
    for (std::size_t i = 0; i < n; ++i) axpy(xr[i], w.ptr() + i * m, o, m);
  }
  return out;
}

template <typename T>
Tensor<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out, T* grad_w, T* grad_b) {
  const std::size_t batch = x.dim(0), n = x.dim(1), m = w.dim(1);
  if (grad_out.shape() != Shape{batch, m}) shape_error("dense_backward: grad shape mismatch");
  Tensor<T> gx(x.shape());
  for (std::size_t r = 0; r < batch; ++r) {
    const T* g = grad_out.ptr() + r * m;
    const T* xr = x.ptr() + r * n;
    T* gxr = gx.ptr() + r * n;
    for (std::size_t i = 0; i < n; ++i) {
      gxr[i] = dot(w.ptr() + i * m, g, m);
      if (grad_w) axpy(xr[i], g, grad_w + i * m, m);
    }
    if (grad_b) axpy(T{1}, g, grad_b, m);
  }
  return gx;
}

#define TRAJGAN_INSTANTIATE_OPS(T)                                                                                  \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t);                    \
  template Tensor<T> conv1d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, T*, T*);   \
  template Tensor<T> frac_conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t);  \
  template Tensor<T> frac_conv1d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, T*,   \
                                          T*);                                                                     \
  template Tensor<T> maxpool1d(const Tensor<T>&, std::size_t, std::size_t, std::vector<std::size_t>*);             \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> dense_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T*, T*);

TRAJGAN_INSTANTIATE_OPS(float)
TRAJGAN_INSTANTIATE_OPS(double)

}  // namespace trajgan::nn
