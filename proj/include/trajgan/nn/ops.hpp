#pragma once

// Functional kernels behind the layers. Sequence tensors are [B, L, C];
// convolution weights are [kernel, C_in, C_out] for conv1d. frac_conv1d
// reuses the conv1d weight of the matching forward geometry, so a layer
// mapping C_y -> C_x channels stores [kernel, C_x, C_y].

#include <cstddef>

#include "trajgan/nn/tensor.hpp"

namespace trajgan::nn {

// "Same-ceil" geometry: out_len = ceil(in_len / stride), with
// pad_total = max(0, (out_len - 1) * stride + kernel - in_len) split as
// floor(pad_total / 2) on the left and the remainder on the right.
struct ConvGeometry {
  std::size_t in_len = 0;
  std::size_t out_len = 0;
  std::size_t kernel = 0;
  std::size_t stride = 0;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
};

ConvGeometry same_ceil_geometry(std::size_t in_len, std::size_t kernel, std::size_t stride);

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, std::size_t stride);

// Returns dL/dx; accumulates into grad_w / grad_b when non-null.
template <typename T>
Tensor<T> conv1d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out, std::size_t stride,
                          T* grad_w, T* grad_b);

// Transpose of conv1d for the forward geometry whose input length is
// target_len. Requires ceil(target_len / stride) == y.dim(1).
template <typename T>
Tensor<T> frac_conv1d(const Tensor<T>& y, const Tensor<T>& w, const Tensor<T>& b, std::size_t stride,
                      std::size_t target_len);

template <typename T>
Tensor<T> frac_conv1d_backward(const Tensor<T>& y, const Tensor<T>& w, const Tensor<T>& grad_out, std::size_t stride,
                               T* grad_w, T* grad_b);

// Windowed max with -inf padding. argmax receives the flat input index per
// output element (first index on ties).
template <typename T>
Tensor<T> maxpool1d(const Tensor<T>& x, std::size_t window, std::size_t stride, std::vector<std::size_t>* argmax);

// x: [B, N], w: [N, M], b: [M].
template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

template <typename T>
Tensor<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out, T* grad_w, T* grad_b);

}  // namespace trajgan::nn
