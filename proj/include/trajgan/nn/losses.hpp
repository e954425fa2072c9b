#pragma once

#include <span>
#include <vector>

#include "trajgan/nn/tensor.hpp"

namespace trajgan::nn {

template <typename T>
struct LossResult {
  double value = 0.0;
  Tensor<T> grad;  // d value / d input, same shape as the input
};

// Row-wise log-sum-exp over columns [begin, end) of a [B, K] tensor.
template <typename T>
double log_sum_exp(const Tensor<T>& logits, std::size_t row, std::size_t begin, std::size_t end);

// Row-wise softmax of a [B, K] tensor, computed in double.
template <typename T>
std::vector<double> softmax_rows(const Tensor<T>& logits);

// Mean over the batch of -sum_k target_k * log softmax(logits)_k. Targets
// may be smoothed distributions.
template <typename T>
LossResult<T> softmax_xent(const Tensor<T>& logits, const Tensor<T>& targets);

// Squared L2 distance between the batch-mean rows of real_features and
// fake_features ([B, F] each). Gradient is w.r.t. fake_features.
template <typename T>
LossResult<T> feature_matching_loss(const Tensor<T>& real_features, const Tensor<T>& fake_features);

}  // namespace trajgan::nn
