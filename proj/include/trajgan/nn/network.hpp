#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "trajgan/nn/layers.hpp"

namespace trajgan::nn {

inline constexpr double kDefaultInitStd = 0.02;

// Per-layer output shapes of a layer stack, without allocating parameters.
std::vector<Shape> trace_shapes(std::span<const LayerSpec> specs, const Shape& input_shape);

// A sequential layer stack with a layer-granular reverse-mode tape: each
// forward() caches per-layer state and backward() replays it in reverse.
template <typename T>
class Network {
 public:
  static constexpr std::size_t kAll = std::numeric_limits<std::size_t>::max();

  Network(std::vector<LayerSpec> specs, Shape input_shape);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
  const Shape& input_shape() const noexcept { return input_shape_; }
  Shape output_shape() const;
  std::vector<Shape> shape_trace() const;
  std::size_t depth() const noexcept { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }

  // Runs the first `depth` layers (all by default). Every layer output is
  // checked for NaN/Inf.
  Tensor<T> forward(const Tensor<T>& x, const ForwardContext& ctx, std::size_t depth = kAll);

  // Back-propagates through the layers used by the last forward().
  Tensor<T> backward(const Tensor<T>& grad_out, ParamGrad mode = ParamGrad::accumulate);

  std::vector<Tensor<T>*> parameters();
  std::vector<Tensor<T>*> buffers();
  std::size_t parameter_count() const;

  void initialize(Rng& rng, double weight_std = kDefaultInitStd);
  void zero_grad();

  // Parameters followed by buffers, flattened in layer order.
  std::vector<T> snapshot() const;
  void restore(std::span<const T> values);
  // FNV-1a over the bit patterns of all parameters.
  std::uint64_t checksum() const;

 private:
  std::vector<LayerSpec> specs_;
  Shape input_shape_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::size_t last_depth_ = 0;
};

}  // namespace trajgan::nn
