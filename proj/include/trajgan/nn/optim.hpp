#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trajgan/nn/tensor.hpp"

namespace trajgan::nn {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig config{};
  std::uint64_t t = 0;
  std::vector<std::vector<T>> m;  // first moments, one per parameter tensor
  std::vector<std::vector<T>> v;  // second moments
};

// One bias-corrected Adam update of every parameter from its gradient slot.
// Moment buffers are allocated on first use.
template <typename T>
void adam_step(std::span<Tensor<T>* const> params, AdamState<T>& state);

// Global L2 norm over all gradient slots.
template <typename T>
double gradient_norm(std::span<Tensor<T>* const> params);

// Rescales all gradients by max_norm / norm when the global norm exceeds
// max_norm. Returns the norm before clipping.
template <typename T>
double clip_gradients(std::span<Tensor<T>* const> params, double max_norm);

}  // namespace trajgan::nn
