#include "trajgan/nn/layers.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "trajgan/nn/ops.hpp"

namespace trajgan::nn {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 10> kKindNames = {{
    {LayerKind::conv1d, "conv1d"},
    {LayerKind::maxpool1d, "maxpool1d"},
    {LayerKind::frac_conv1d, "frac_conv1d"},
    {LayerKind::dense, "dense"},
    {LayerKind::batchnorm, "batchnorm"},
    {LayerKind::dropout, "dropout"},
    {LayerKind::leaky_relu, "leaky_relu"},
    {LayerKind::tanh, "tanh"},
    {LayerKind::flatten, "flatten"},
    {LayerKind::project_reshape, "project_reshape"},
}};

[[noreturn]] void bad_spec(const LayerSpec& spec, const Shape& in, const std::string& why) {
  throw std::invalid_argument(std::string(to_string(spec.kind)) + " on input " + to_string(in) + ": " + why);
}

void require_sequence(const LayerSpec& spec, const Shape& in) {
  if (in.size() != 2) bad_spec(spec, in, "expected [length, channels]");
}

template <typename T>
void fill_normal(Tensor<T>& t, Rng& rng, double stddev) {
  for (T& v : t.data()) v = static_cast<T>(rng.normal(0.0, stddev));
}

template <typename T>
Tensor<T> param(Shape shape, T fill = T{0}) {
  Tensor<T> t(std::move(shape), fill);
  t.enable_grad();
  return t;
}

// ---------------------------------------------------------------------------

template <typename T>
class Conv1dLayer final : public Layer<T> {
 public:
  Conv1dLayer(const LayerSpec& spec, const Shape& in)
      : Layer<T>(spec, in), w_(param<T>({spec.kernel, in[1], spec.filters})), b_(param<T>({spec.filters})) {}

  Tensor<T> forward(const Tensor<T>& x, const ForwardContext&) override {
    this->check_input(x);
    x_ = x;
    return conv1d(x, w_, b_, this->spec_.stride);
  }
  Tensor<T> backward(const Tensor<T>& g, ParamGrad mode) override {
    const bool acc = mode == ParamGrad::accumulate;
    return conv1d_backward(x_, w_, g, this->spec_.stride, acc ? w_.grad().data() : nullptr,
                           acc ? b_.grad().data() : nullptr);
  }
  std::vector<Tensor<T>*> parameters() override { return {&w_, &b_}; }
  std::vector<std::string> parameter_names() const override { return {"w", "b"}; }
  void initialize(Rng& rng, double std) override {
    fill_normal(w_, rng, std);
    std::fill(b_.data().begin(), b_.data().end(), T{0});
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv1dLayer>(*this); }

 private:
  Tensor<T> w_, b_, x_;
};

template <typename T>
class FracConv1dLayer final : public Layer<T> {
 public:
  FracConv1dLayer(const LayerSpec& spec, const Shape& in)
      : Layer<T>(spec, in), w_(param<T>({spec.kernel, spec.filters, in[1]})), b_(param<T>({spec.filters})) {}

  Tensor<T> forward(const Tensor<T>& y, const ForwardContext&) override {
    this->check_input(y);
    y_ = y;
    return frac_conv1d(y, w_, b_, this->spec_.stride, this->spec_.out_len);
  }
  Tensor<T> backward(const Tensor<T>& g, ParamGrad mode) override {
    const bool acc = mode == ParamGrad::accumulate;
    return frac_conv1d_backward(y_, w_, g, this->spec_.stride, acc ? w_.grad().data() : nullptr,
                                acc ? b_.grad().data() : nullptr);
  }
  std::vector<Tensor<T>*> parameters() override { return {&w_, &b_}; }
  std::vector<std::string> parameter_names() const override { return {"w", "b"}; }
  void initialize(Rng& rng, double std) override {
    fill_normal(w_, rng, std);
    std::fill(b_.data().begin(), b_.data().end(), T{0});
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<FracConv1dLayer>(*this); }

 private:
  Tensor<T> w_, b_, y_;
};

template <typename T>
class MaxPoolLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  Tensor<T> forward(const Tensor<T>& x, const ForwardContext&) override {
    this->check_input(x);
    in_shape_ = x.shape();
    return maxpool1d(x, this->spec_.kernel, this->spec_.stride, &argmax_);
  }
  Tensor<T> backward(const Tensor<T>& g, ParamGrad) override {
    Tensor<T> gx(in_shape_);
    for (std::size_t i = 0; i < g.size(); ++i) gx[argmax_[i]] += g[i];
    return gx;
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPoolLayer>(*this); }

 private:
  Shape in_shape_;
  std::vector<std::size_t> argmax_;
};

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(const LayerSpec& spec, const Shape& in)
      : Layer<T>(spec, in), w_(param<T>({in[0], spec.filters})), b_(param<T>({spec.filters})) {}

  Tensor<T> forward(const Tensor<T>& x, const ForwardContext&) override {
    this->check_input(x);
    x_ = x;
    return dense(x, w_, b_);
  }
  Tensor<T> backward(const Tensor<T>& g, ParamGrad mode) override {
    const bool acc = mode == ParamGrad::accumulate;
    return dense_backward(x_, w_, g, acc ? w_.grad().data() : nullptr, acc ? b_.grad().data() : nullptr);
  }
  std::vector<Tensor<T>*> parameters() override { return {&w_, &b_}; }
  std::vector<std::string> parameter_names() const override { return {"w", "b"}; }
  void initialize(Rng& rng, double std) override {
    fill_normal(w_, rng, std);
    std::fill(b_.data().begin(), b_.data().end(), T{0});
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<DenseLayer>(*this); }

 private:
  Tensor<T> w_, b_, x_;
};

// Dense projection followed by a reshape to [out_len, filters].
template <typename T>
class ProjectReshapeLayer final : public Layer<T> {
 public:
  ProjectReshapeLayer(const LayerSpec& spec, const Shape& in)
      : Layer<T>(spec, in), w_(param<T>({in[0], spec.out_len * spec.filters})), b_(param<T>({spec.out_len * spec.filters})) {}

  Tensor<T> forward(const Tensor<T>& x, const ForwardContext&) override {
    this->check_input(x);
    x_ = x;
    Tensor<T> out = dense(x, w_, b_);
    out.reshape(this->batch_shape(x.dim(0), this->output_shape_));
    return out;
  }
  Tensor<T> backward(const Tensor<T>& g, ParamGrad mode) override {
    const bool acc = mode == ParamGrad::accumulate;
    const Tensor<T> flat = g.reshaped({g.dim(0), w_.dim(1)});
    return dense_backward(x_, w_, flat, acc ? w_.grad().data() : nullptr, acc ? b_.grad().data() : nullptr);
  }
  std::vector<Tensor<T>*> parameters() override { return {&w_, &b_}; }
  std::vector<std::string> parameter_names() const override { return {"w", "b"}; }
  void initialize(Rng& rng, double std) override {
    fill_normal(w_, rng, std);
    std::fill(b_.data().begin(), b_.data().end(), T{0});
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ProjectReshapeLayer>(*this); }

 private:
  Tensor<T> w_, b_, x_;
};

// Normalizes over every axis but the last (batch and, for sequences, length).
template <typename T>
class BatchNormLayer final : public Layer<T> {
 public:
  BatchNormLayer(const LayerSpec& spec, const Shape& in)
      : Layer<T>(spec, in),
        channels_(in.back()),
        gamma_(param<T>({in.back()}, T{1})),
        beta_(param<T>({in.back()})),
        running_mean_(Shape{in.back()}, T{0}),
        running_var_(Shape{in.back()}, T{1}) {}

  Tensor<T> forward(const Tensor<T>& x, const ForwardContext& ctx) override {
    this->check_input(x);
    const std::size_t rows = x.size() / channels_;
    xhat_ = Tensor<T>(x.shape());
    inv_std_.assign(channels_, T{0});
    Tensor<T> out(x.shape());
    train_ = ctx.phase == Phase::train;
    if (train_) {
      if (x.dim(0) < 2) throw std::invalid_argument("batchnorm: batch size must be at least 2 in train mode");
      std::vector<double> mean(channels_, 0.0), var(channels_, 0.0);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < channels_; ++c) mean[c] += x[r * channels_ + c];
      for (auto& m : mean) m /= static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < channels_; ++c) {
          const double d = x[r * channels_ + c] - mean[c];
          var[c] += d * d;
        }
      for (auto& v : var) v /= static_cast<double>(rows);
      for (std::size_t c = 0; c < channels_; ++c) {
        inv_std_[c] = static_cast<T>(1.0 / std::sqrt(var[c] + kBatchNormEpsilon));
        if (ctx.update_running_stats) {
          running_mean_[c] = static_cast<T>(kBatchNormMomentum * running_mean_[c] + (1.0 - kBatchNormMomentum) * mean[c]);
          running_var_[c] = static_cast<T>(kBatchNormMomentum * running_var_[c] + (1.0 - kBatchNormMomentum) * var[c]);
        }
      }
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < channels_; ++c) {
          const std::size_t i = r * channels_ + c;
          xhat_[i] = static_cast<T>((x[i] - mean[c]) * inv_std_[c]);
        }
    } else {
      for (std::size_t c = 0; c < channels_; ++c) {
        inv_std_[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var_[c]) + kBatchNormEpsilon));
      }
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < channels_; ++c) {
          const std::size_t i = r * channels_ + c;
          xhat_[i] = (x[i] - running_mean_[c]) * inv_std_[c];
        }
    }
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < channels_; ++c) {
        const std::size_t i = r * channels_ + c;
        out[i] = gamma_[c] * xhat_[i] + beta_[c];
      }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& g, ParamGrad mode) override {
    const std::size_t rows = g.size() / channels_;
    std::vector<double> sum_g(channels_, 0.0), sum_gx(channels_, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < channels_; ++c) {
        const std::size_t i = r * channels_ + c;
        sum_g[c] += g[i];
        sum_gx[c] += static_cast<double>(g[i]) * xhat_[i];
      }
    if (mode == ParamGrad::accumulate) {
      for (std::size_t c = 0; c < channels_; ++c) {
        gamma_.grad()[c] += static_cast<T>(sum_gx[c]);
        beta_.grad()[c] += static_cast<T>(sum_g[c]);
      }
    }
    Tensor<T> gx(g.shape());
    const double n = static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < channels_; ++c) {
        const std::size_t i = r * channels_ + c;
        const double scale = static_cast<double>(gamma_[c]) * inv_std_[c];
        gx[i] = train_ ? static_cast<T>(scale / n * (n * g[i] - sum_g[c] - xhat_[i] * sum_gx[c]))
                       : static_cast<T>(scale * g[i]);
      }
    return gx;
  }

  std::vector<Tensor<T>*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<Tensor<T>*> buffers() override { return {&running_mean_, &running_var_}; }
  std::vector<std::string> parameter_names() const override { return {"gamma", "beta"}; }
  std::vector<std::string> buffer_names() const override { return {"running_mean", "running_var"}; }
  void initialize(Rng&, double) override {
    std::fill(gamma_.data().begin(), gamma_.data().end(), T{1});
    std::fill(beta_.data().begin(), beta_.data().end(), T{0});
    std::fill(running_mean_.data().begin(), running_mean_.data().end(), T{0});
    std::fill(running_var_.data().begin(), running_var_.data().end(), T{1});
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<BatchNormLayer>(*this); }

 private:
  std::size_t channels_;
  Tensor<T> gamma_, beta_, running_mean_, running_var_;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
  bool train_ = false;
};

// Inverted dropout: kept units are scaled by 1/keep_prob at train time.
template <typename T>
class DropoutLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  Tensor<T> forward(const Tensor<T>& x, const ForwardContext& ctx) override {
    this->check_input(x);
    mask_.clear();
    if (ctx.phase == Phase::eval || this->spec_.keep_prob >= 1.0) return x;
    if (!ctx.rng) throw std::invalid_argument("dropout: train phase requires an rng");
    const T scale = static_cast<T>(1.0 / this->spec_.keep_prob);
    mask_.resize(x.size());
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask_[i] = ctx.rng->uniform() < this->spec_.keep_prob ? scale : T{0};
      out[i] = x[i] * mask_[i];
    }
    return out;
  }
  Tensor<T> backward(const Tensor<T>& g, ParamGrad) override {
    if (mask_.empty()) return g;
    Tensor<T> gx(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * mask_[i];
    return gx;
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<DropoutLayer>(*this); }

 private:
  std::vector<T> mask_;
};

template <typename T>
class LeakyReluLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  Tensor<T> forward(const Tensor<T>& x, const ForwardContext&) override {
    this->check_input(x);
    x_ = x;
    const T alpha = static_cast<T>(this->spec_.alpha);
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T{0} ? x[i] : alpha * x[i];
    return out;
  }
  Tensor<T> backward(const Tensor<T>& g, ParamGrad) override {
    const T alpha = static_cast<T>(this->spec_.alpha);
    Tensor<T> gx(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = x_[i] > T{0} ? g[i] : alpha * g[i];
    return gx;
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<LeakyReluLayer>(*this); }

 private:
  Tensor<T> x_;
};

template <typename T>
class TanhLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  Tensor<T> forward(const Tensor<T>& x, const ForwardContext&) override {
    this->check_input(x);
    y_ = Tensor<T>(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y_[i] = std::tanh(x[i]);
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& g, ParamGrad) override {
    Tensor<T> gx(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * (T{1} - y_[i] * y_[i]);
    return gx;
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<TanhLayer>(*this); }

 private:
  Tensor<T> y_;
};

template <typename T>
class FlattenLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  Tensor<T> forward(const Tensor<T>& x, const ForwardContext&) override {
    this->check_input(x);
    in_shape_ = x.shape();
    return x.reshaped({x.dim(0), this->output_shape_[0]});
  }
  Tensor<T> backward(const Tensor<T>& g, ParamGrad) override { return g.reshaped(in_shape_); }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<FlattenLayer>(*this); }

 private:
  Shape in_shape_;
};

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw std::invalid_argument("unknown layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::conv(std::size_t kernel, std::size_t filters, std::size_t stride) {
  return {.kind = LayerKind::conv1d, .kernel = kernel, .stride = stride, .filters = filters};
}
LayerSpec LayerSpec::maxpool(std::size_t window, std::size_t stride) {
  return {.kind = LayerKind::maxpool1d, .kernel = window, .stride = stride};
}
LayerSpec LayerSpec::frac_conv(std::size_t kernel, std::size_t filters, std::size_t stride, std::size_t target_len) {
  return {.kind = LayerKind::frac_conv1d, .kernel = kernel, .stride = stride, .filters = filters, .out_len = target_len};
}
LayerSpec LayerSpec::fc(std::size_t units) { return {.kind = LayerKind::dense, .filters = units}; }
LayerSpec LayerSpec::batch_norm() { return {.kind = LayerKind::batchnorm}; }
LayerSpec LayerSpec::drop(double keep_prob) { return {.kind = LayerKind::dropout, .keep_prob = keep_prob}; }
LayerSpec LayerSpec::leaky(double alpha) { return {.kind = LayerKind::leaky_relu, .alpha = alpha}; }
LayerSpec LayerSpec::tanh_act() { return {.kind = LayerKind::tanh}; }
LayerSpec LayerSpec::flat() { return {.kind = LayerKind::flatten}; }
LayerSpec LayerSpec::project(std::size_t length, std::size_t channels) {
  return {.kind = LayerKind::project_reshape, .filters = channels, .out_len = length};
}

Shape infer_output_shape(const LayerSpec& spec, const Shape& in) {
  if (in.empty()) bad_spec(spec, in, "empty input shape");
  switch (spec.kind) {
    case LayerKind::conv1d:
    case LayerKind::maxpool1d: {
      require_sequence(spec, in);
      if (spec.kernel == 0 || spec.stride == 0) bad_spec(spec, in, "kernel and stride must be positive");
      if (spec.kind == LayerKind::conv1d && spec.filters == 0) bad_spec(spec, in, "filters must be positive");
      const std::size_t out_len = (in[0] + spec.stride - 1) / spec.stride;
      return {out_len, spec.kind == LayerKind::conv1d ? spec.filters : in[1]};
    }
    case LayerKind::frac_conv1d: {
      require_sequence(spec, in);
      if (spec.kernel == 0 || spec.stride == 0 || spec.filters == 0) bad_spec(spec, in, "kernel, stride and filters must be positive");
      if (spec.out_len == 0 || (spec.out_len + spec.stride - 1) / spec.stride != in[0]) {
        bad_spec(spec, in, "target length " + std::to_string(spec.out_len) + " is not a stride-" +
                               std::to_string(spec.stride) + " preimage of length " + std::to_string(in[0]));
      }
      return {spec.out_len, spec.filters};
    }
    case LayerKind::dense:
      if (in.size() != 1) bad_spec(spec, in, "dense expects a flat input");
      if (spec.filters == 0) bad_spec(spec, in, "units must be positive");
      return {spec.filters};
    case LayerKind::project_reshape:
      if (in.size() != 1) bad_spec(spec, in, "projection expects a flat input");
      if (spec.filters == 0 || spec.out_len == 0) bad_spec(spec, in, "length and channels must be positive");
      return {spec.out_len, spec.filters};
    case LayerKind::dropout:
      if (!(spec.keep_prob > 0.0 && spec.keep_prob <= 1.0)) bad_spec(spec, in, "keep_prob must be in (0, 1]");
      return in;
    case LayerKind::batchnorm:
    case LayerKind::leaky_relu:
    case LayerKind::tanh:
      return in;
    case LayerKind::flatten:
      return {shape_size(in)};
  }
  bad_spec(spec, in, "unhandled layer kind");
}

template <typename T>
void Layer<T>::check_input(const Tensor<T>& x) const {
  if (x.rank() != input_shape_.size() + 1 || !std::equal(input_shape_.begin(), input_shape_.end(), x.shape().begin() + 1)) {
    throw std::invalid_argument(std::string(to_string(spec_.kind)) + ": expected input [B, " + to_string(input_shape_) +
                                "], got " + to_string(x.shape()));
  }
  if (x.dim(0) == 0) throw std::invalid_argument(std::string(to_string(spec_.kind)) + ": empty batch");
}

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& in) {
  infer_output_shape(spec, in);
  switch (spec.kind) {
    case LayerKind::conv1d: return std::make_unique<Conv1dLayer<T>>(spec, in);
    case LayerKind::maxpool1d: return std::make_unique<MaxPoolLayer<T>>(spec, in);
    case LayerKind::frac_conv1d: return std::make_unique<FracConv1dLayer<T>>(spec, in);
    case LayerKind::dense: return std::make_unique<DenseLayer<T>>(spec, in);
    case LayerKind::batchnorm: return std::make_unique<BatchNormLayer<T>>(spec, in);
    case LayerKind::dropout: return std::make_unique<DropoutLayer<T>>(spec, in);
    case LayerKind::leaky_relu: return std::make_unique<LeakyReluLayer<T>>(spec, in);
    case LayerKind::tanh: return std::make_unique<TanhLayer<T>>(spec, in);
    case LayerKind::flatten: return std::make_unique<FlattenLayer<T>>(spec, in);
    case LayerKind::project_reshape: return std::make_unique<ProjectReshapeLayer<T>>(spec, in);
  }
  throw std::invalid_argument("unhandled layer kind");
}

template class Layer<float>;
template class Layer<double>;
template std::unique_ptr<Layer<float>> make_layer<float>(const LayerSpec&, const Shape&);
template std::unique_ptr<Layer<double>> make_layer<double>(const LayerSpec&, const Shape&);

}  // namespace trajgan::nn
