#pragma once

// Losses of the K+1-class semi-supervised game. Logits are [B, K+1] with
// the fake class last; for K-output classifiers only the supervised loss
// applies.

#include <span>

#include "trajgan/nn/losses.hpp"

namespace trajgan {

enum class SupervisedLossKind {
  conditional,  // cross-entropy over the real-class logits only, i.e. -log p(y | x, real)
  plain,        // cross-entropy over all outputs
};

// Mean -log p(y | x). Labels must be real classes; a fake-class or
// out-of-range label throws DataError.
template <typename T>
nn::LossResult<T> supervised_loss(const nn::Tensor<T>& logits, std::span<const int> labels,
                                  SupervisedLossKind kind = SupervisedLossKind::conditional);

// Real-data term: mean of -s*log(1 - p_fake) - (1 - s)*log(p_fake), where s
// is the one-sided smoothing target (1 disables smoothing).
template <typename T>
nn::LossResult<T> unsupervised_real_term(const nn::Tensor<T>& real_logits, double smoothing_target = 1.0);

// Generated-data term: mean of -log p_fake.
template <typename T>
nn::LossResult<T> unsupervised_fake_term(const nn::Tensor<T>& fake_logits);

template <typename T>
struct UnsupervisedLoss {
  double value = 0.0;
  double real_term = 0.0;
  double fake_term = 0.0;
  nn::Tensor<T> grad_real;
  nn::Tensor<T> grad_fake;
};

template <typename T>
UnsupervisedLoss<T> unsupervised_loss(const nn::Tensor<T>& real_logits, const nn::Tensor<T>& fake_logits,
                                      double smoothing_target = 1.0);

// Non-saturating generator objective: mean of -log(1 - p_fake(G(z))).
template <typename T>
nn::LossResult<T> generator_loss(const nn::Tensor<T>& fake_logits);

// p_fake per row.
template <typename T>
std::vector<double> fake_probability(const nn::Tensor<T>& logits);

}  // namespace trajgan
