#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "trajgan/nn/tensor.hpp"
#include "trajgan/rng.hpp"

namespace trajgan::nn {

enum class LayerKind {
  conv1d,
  maxpool1d,
  frac_conv1d,
  dense,
  batchnorm,
  dropout,
  leaky_relu,
  tanh,
  flatten,
  project_reshape,
};

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

// Declarative description of one layer. `filters` is the output channel
// count (conv, frac_conv, project_reshape) or unit count (dense);
// `out_len` is the target length of frac_conv1d and the sequence length
// produced by project_reshape.
struct LayerSpec {
  LayerKind kind = LayerKind::flatten;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t filters = 0;
  std::size_t out_len = 0;
  double keep_prob = 1.0;
  double alpha = 0.2;

  static LayerSpec conv(std::size_t kernel, std::size_t filters, std::size_t stride);
  static LayerSpec maxpool(std::size_t window, std::size_t stride);
  static LayerSpec frac_conv(std::size_t kernel, std::size_t filters, std::size_t stride, std::size_t target_len);
  static LayerSpec fc(std::size_t units);
  static LayerSpec batch_norm();
  static LayerSpec drop(double keep_prob);
  static LayerSpec leaky(double alpha = 0.2);
  static LayerSpec tanh_act();
  static LayerSpec flat();
  static LayerSpec project(std::size_t length, std::size_t channels);

  bool operator==(const LayerSpec&) const = default;
};

// Per-sample output shape (batch dimension excluded). Throws
// std::invalid_argument when the spec cannot consume `in`.
Shape infer_output_shape(const LayerSpec& spec, const Shape& in);

enum class Phase { train, eval };

struct ForwardContext {
  Phase phase = Phase::eval;
  Rng* rng = nullptr;  // required by dropout in train phase
  bool update_running_stats = true;
};

// Whether backward() accumulates parameter gradients or only propagates
// the input gradient.
enum class ParamGrad { accumulate, skip };

inline constexpr double kBatchNormMomentum = 0.9;
inline constexpr double kBatchNormEpsilon = 1e-5;

template <typename T>
class Layer {
 public:
  Layer(LayerSpec spec, Shape input_shape)
      : spec_(spec), input_shape_(std::move(input_shape)), output_shape_(infer_output_shape(spec_, input_shape_)) {}
  virtual ~Layer() = default;

  const LayerSpec& spec() const noexcept { return spec_; }
  const Shape& input_shape() const noexcept { return input_shape_; }
  const Shape& output_shape() const noexcept { return output_shape_; }

  // x is [B, input_shape...]. Caches what backward() needs.
  virtual Tensor<T> forward(const Tensor<T>& x, const ForwardContext& ctx) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out, ParamGrad mode) = 0;

  virtual std::vector<Tensor<T>*> parameters() { return {}; }
  virtual std::vector<Tensor<T>*> buffers() { return {}; }
  virtual std::vector<std::string> parameter_names() const { return {}; }
  virtual std::vector<std::string> buffer_names() const { return {}; }
  virtual void initialize(Rng& /*rng*/, double /*weight_std*/) {}
  virtual std::unique_ptr<Layer> clone() const = 0;

 protected:
  Shape batch_shape(std::size_t batch, const Shape& sample) const {
    Shape s{batch};
    s.insert(s.end(), sample.begin(), sample.end());
    return s;
  }
  void check_input(const Tensor<T>& x) const;

  LayerSpec spec_;
  Shape input_shape_;
  Shape output_shape_;
};

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& input_shape);

}  // namespace trajgan::nn
