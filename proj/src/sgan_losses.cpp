#include "trajgan/sgan_losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "trajgan/corpus.hpp"
#include "trajgan/error.hpp"

namespace trajgan {

using nn::log_sum_exp;
using nn::LossResult;
using nn::Tensor;

namespace {

template <typename T>
void require_gan_logits(const Tensor<T>& logits, const char* what) {
  if (logits.rank() != 2 || logits.dim(1) != static_cast<std::size_t>(kNumModes + 1)) {
    throw std::invalid_argument(std::string(what) + ": expected [B, " + std::to_string(kNumModes + 1) + "] logits, got " +
                                nn::to_string(logits.shape()));
  }
}

template <typename T>
void finish(LossResult<T>& r, const char* what) {
  if (!std::isfinite(r.value)) throw NumericError(std::string(what) + ": non-finite loss");
}

}  // namespace

template <typename T>
LossResult<T> supervised_loss(const Tensor<T>& logits, std::span<const int> labels, SupervisedLossKind kind) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size() || logits.dim(1) < static_cast<std::size_t>(kNumModes)) {
    throw std::invalid_argument("supervised_loss: logits/labels shape mismatch");
  }
  const std::size_t b = logits.dim(0), k = logits.dim(1);
  const std::size_t classes = kind == SupervisedLossKind::conditional ? static_cast<std::size_t>(kNumModes) : k;
  LossResult<T> out{0.0, Tensor<T>(logits.shape())};
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= kNumModes) throw DataError("supervised_loss: label " + std::to_string(y) + " is not a real class");
    const double lse = log_sum_exp(logits, i, 0, classes);
    out.value += lse - static_cast<double>(logits[i * k + static_cast<std::size_t>(y)]);
    for (std::size_t j = 0; j < classes; ++j) {
      const double p = std::exp(static_cast<double>(logits[i * k + j]) - lse);
      out.grad[i * k + j] = static_cast<T>((p - (static_cast<int>(j) == y ? 1.0 : 0.0)) * inv_b);
    }
  }
  out.value *= inv_b;
  finish(out, "supervised_loss");
  return out;
}

template <typename T>
LossResult<T> unsupervised_real_term(const Tensor<T>& real_logits, double s) {
  require_gan_logits(real_logits, "unsupervised_real_term");
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("smoothing target must be in [0, 1]");
  const std::size_t b = real_logits.dim(0), k = real_logits.dim(1), fake = static_cast<std::size_t>(kNumModes);
  LossResult<T> out{0.0, Tensor<T>(real_logits.shape())};
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    const double lse_all = log_sum_exp(real_logits, i, 0, k);
    const double lse_real = log_sum_exp(real_logits, i, 0, fake);
    const double fake_logit = real_logits[i * k + fake];
    // -log(1 - p_fake) = lse_all - lse_real;  -log p_fake = lse_all - fake_logit
    double term = s * (lse_all - lse_real);
    if (s < 1.0) term += (1.0 - s) * (lse_all - fake_logit);
    out.value += term;
    for (std::size_t j = 0; j < fake; ++j) {
      const double p = std::exp(static_cast<double>(real_logits[i * k + j]) - lse_all);
      const double q = std::exp(static_cast<double>(real_logits[i * k + j]) - lse_real);
      out.grad[i * k + j] = static_cast<T>((p - s * q) * inv_b);
    }
    const double p_fake = std::exp(fake_logit - lse_all);
    out.grad[i * k + fake] = static_cast<T>((p_fake - (1.0 - s)) * inv_b);
  }
  out.value *= inv_b;
  finish(out, "unsupervised_real_term");
  return out;
}

template <typename T>
LossResult<T> unsupervised_fake_term(const Tensor<T>& fake_logits) {
  require_gan_logits(fake_logits, "unsupervised_fake_term");
  const std::size_t b = fake_logits.dim(0), k = fake_logits.dim(1), fake = static_cast<std::size_t>(kNumModes);
  LossResult<T> out{0.0, Tensor<T>(fake_logits.shape())};
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    const double lse_all = log_sum_exp(fake_logits, i, 0, k);
    out.value += lse_all - static_cast<double>(fake_logits[i * k + fake]);
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(static_cast<double>(fake_logits[i * k + j]) - lse_all);
      out.grad[i * k + j] = static_cast<T>((p - (j == fake ? 1.0 : 0.0)) * inv_b);
    }
  }
  out.value *= inv_b;
  finish(out, "unsupervised_fake_term");
  return out;
}

template <typename T>
UnsupervisedLoss<T> unsupervised_loss(const Tensor<T>& real_logits, const Tensor<T>& fake_logits, double s) {
  auto real = unsupervised_real_term(real_logits, s);
  auto fake = unsupervised_fake_term(fake_logits);
  return {real.value + fake.value, real.value, fake.value, std::move(real.grad), std::move(fake.grad)};
}

template <typename T>
LossResult<T> generator_loss(const Tensor<T>& fake_logits) {
  // Same expression as the unsmoothed real-data term, applied to fakes.
  return unsupervised_real_term(fake_logits, 1.0);
}

template <typename T>
std::vector<double> fake_probability(const Tensor<T>& logits) {
  require_gan_logits(logits, "fake_probability");
  std::vector<double> out(logits.dim(0));
  const std::size_t k = logits.dim(1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(static_cast<double>(logits[i * k + kNumModes]) - log_sum_exp(logits, i, 0, k));
  }
  return out;
}

#define TRAJGAN_INSTANTIATE_SGAN_LOSSES(T)                                                                      \
  template LossResult<T> supervised_loss<T>(const Tensor<T>&, std::span<const int>, SupervisedLossKind);       \
  template LossResult<T> unsupervised_real_term<T>(const Tensor<T>&, double);                                  \
  template LossResult<T> unsupervised_fake_term<T>(const Tensor<T>&);                                          \
  template UnsupervisedLoss<T> unsupervised_loss<T>(const Tensor<T>&, const Tensor<T>&, double);               \
  template LossResult<T> generator_loss<T>(const Tensor<T>&);                                                  \
  template std::vector<double> fake_probability<T>(const Tensor<T>&);

TRAJGAN_INSTANTIATE_SGAN_LOSSES(float)
TRAJGAN_INSTANTIATE_SGAN_LOSSES(double)

}  // namespace trajgan
