#include "trajgan/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "trajgan/error.hpp"

namespace trajgan::nn {

template <typename T>
double log_sum_exp(const Tensor<T>& logits, std::size_t row, std::size_t begin, std::size_t end) {
  const std::size_t k = logits.dim(1);
  const T* r = logits.ptr() + row * k;
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = begin; j < end; ++j) mx = std::max(mx, static_cast<double>(r[j]));
  double s = 0.0;
  for (std::size_t j = begin; j < end; ++j) s += std::exp(static_cast<double>(r[j]) - mx);
  return mx + std::log(s);
}

template <typename T>
std::vector<double> softmax_rows(const Tensor<T>& logits) {
  if (logits.rank() != 2) throw std::invalid_argument("softmax_rows: expected [B, K]");
  const std::size_t b = logits.dim(0), k = logits.dim(1);
  std::vector<double> out(b * k);
  for (std::size_t i = 0; i < b; ++i) {
    const double lse = log_sum_exp(logits, i, 0, k);
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = std::exp(static_cast<double>(logits[i * k + j]) - lse);
  }
  return out;
}

template <typename T>
LossResult<T> softmax_xent(const Tensor<T>& logits, const Tensor<T>& targets) {
  if (logits.rank() != 2 || logits.shape() != targets.shape()) {
    throw std::invalid_argument("softmax_xent: logits and targets must both be [B, K]");
  }
  const std::size_t b = logits.dim(0), k = logits.dim(1);
  LossResult<T> out{0.0, Tensor<T>(logits.shape())};
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    const double lse = log_sum_exp(logits, i, 0, k);
    double mass = 0.0;
    for (std::size_t j = 0; j < k; ++j) mass += targets[i * k + j];
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t idx = i * k + j;
      const double logp = static_cast<double>(logits[idx]) - lse;
      out.value -= targets[idx] * logp;
      out.grad[idx] = static_cast<T>((mass * std::exp(logp) - targets[idx]) * inv_b);
    }
  }
  out.value *= inv_b;
  if (!std::isfinite(out.value)) throw NumericError("softmax_xent: non-finite loss");
  return out;
}

template <typename T>
LossResult<T> feature_matching_loss(const Tensor<T>& real_features, const Tensor<T>& fake_features) {
  if (real_features.rank() != 2 || fake_features.rank() != 2 || real_features.dim(1) != fake_features.dim(1)) {
    throw std::invalid_argument("feature_matching_loss: expected [B, F] inputs of equal width");
  }
  const std::size_t f = real_features.dim(1);
  const std::size_t br = real_features.dim(0), bf = fake_features.dim(0);
  std::vector<double> real_mean(f, 0.0), fake_mean(f, 0.0), diff(f);
  for (std::size_t i = 0; i < br; ++i)
    for (std::size_t j = 0; j < f; ++j) real_mean[j] += real_features[i * f + j];
  for (std::size_t i = 0; i < bf; ++i)
    for (std::size_t j = 0; j < f; ++j) fake_mean[j] += fake_features[i * f + j];
  for (std::size_t j = 0; j < f; ++j)
    diff[j] = real_mean[j] / static_cast<double>(br) - fake_mean[j] / static_cast<double>(bf);

  LossResult<T> out{0.0, Tensor<T>(fake_features.shape())};
  for (double d : diff) out.value += d * d;
  for (std::size_t i = 0; i < bf; ++i)
    for (std::size_t j = 0; j < f; ++j) out.grad[i * f + j] = static_cast<T>(-2.0 * diff[j] / static_cast<double>(bf));
  return out;
}

template double log_sum_exp<float>(const Tensor<float>&, std::size_t, std::size_t, std::size_t);
template double log_sum_exp<double>(const Tensor<double>&, std::size_t, std::size_t, std::size_t);
template std::vector<double> softmax_rows<float>(const Tensor<float>&);
template std::vector<double> softmax_rows<double>(const Tensor<double>&);
template LossResult<float> softmax_xent<float>(const Tensor<float>&, const Tensor<float>&);
template LossResult<double> softmax_xent<double>(const Tensor<double>&, const Tensor<double>&);
template LossResult<float> feature_matching_loss<float>(const Tensor<float>&, const Tensor<float>&);
template LossResult<double> feature_matching_loss<double>(const Tensor<double>&, const Tensor<double>&);

}  // namespace trajgan::nn
