#include "trajgan/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace trajgan::nn {

template <typename T>
void adam_step(std::span<Tensor<T>* const> params, AdamState<T>& state) {
  if (state.m.empty()) {
    for (const Tensor<T>* p : params) {
      state.m.emplace_back(p->size(), T{0});
      state.v.emplace_back(p->size(), T{0});
    }
  }
  if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: parameter list changed");

  ++state.t;
  const AdamConfig& c = state.config;
  const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T step = static_cast<T>(c.lr / bias1);
  const T inv_sqrt_bias2 = static_cast<T>(1.0 / std::sqrt(bias2));
  const T eps = static_cast<T>(c.epsilon);

  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor<T>& param = *params[p];
    if (!param.has_grad()) continue;
    if (state.m[p].size() != param.size()) throw std::invalid_argument("adam_step: parameter shape changed");
    auto g = param.grad();
    auto x = param.data();
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = b1 * m[i] + (T{1} - b1) * g[i];
      v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
      x[i] -= step * m[i] / (std::sqrt(v[i]) * inv_sqrt_bias2 + eps);
    }
  }
}

template <typename T>
double gradient_norm(std::span<Tensor<T>* const> params) {
  double sq = 0.0;
  for (const Tensor<T>* p : params) {
    for (const T g : p->grad()) sq += static_cast<double>(g) * g;
  }
  return std::sqrt(sq);
}

template <typename T>
double clip_gradients(std::span<Tensor<T>* const> params, double max_norm) {
  const double norm = gradient_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const T scale = static_cast<T>(max_norm / norm);
    for (Tensor<T>* p : params) {
      for (T& g : p->grad()) g *= scale;
    }
  }
  return norm;
}

template void adam_step<float>(std::span<Tensor<float>* const>, AdamState<float>&);
template void adam_step<double>(std::span<Tensor<double>* const>, AdamState<double>&);
template double gradient_norm<float>(std::span<Tensor<float>* const>);
template double gradient_norm<double>(std::span<Tensor<double>* const>);
template double clip_gradients<float>(std::span<Tensor<float>* const>, double);
template double clip_gradients<double>(std::span<Tensor<double>* const>, double);

}  // namespace trajgan::nn
