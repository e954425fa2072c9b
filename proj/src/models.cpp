#include "trajgan/models.hpp"

#include <array>
#include <stdexcept>

#include "trajgan/error.hpp"

namespace trajgan {

using nn::LayerKind;
using nn::LayerSpec;

namespace {

constexpr double kKeepProb = 0.5;
constexpr double kLeakySlope = 0.2;

std::size_t halve(std::size_t n) { return (n + 1) / 2; }

void append_head(std::vector<LayerSpec>& layers, std::size_t outputs) {
  layers.push_back(LayerSpec::flat());
  layers.push_back(LayerSpec::drop(kKeepProb));
  layers.push_back(LayerSpec::fc(outputs));
}

// conv (stride 1) + batchnorm + leaky relu + max pool, per filter count.
std::vector<LayerSpec> cnn_classifier(std::initializer_list<std::size_t> filters) {
  std::vector<LayerSpec> layers;
  for (std::size_t f : filters) {
    layers.push_back(LayerSpec::conv(kKernel, f, 1));
    layers.push_back(LayerSpec::batch_norm());
    layers.push_back(LayerSpec::leaky(kLeakySlope));
    layers.push_back(LayerSpec::maxpool(kKernel, 2));
  }
  append_head(layers, kNumModes);
  return layers;
}

// Strided convolutions, no pooling, no batchnorm on the input layer.
std::vector<LayerSpec> gan_discriminator(std::initializer_list<std::size_t> filters) {
  std::vector<LayerSpec> layers;
  bool first = true;
  for (std::size_t f : filters) {
    layers.push_back(LayerSpec::conv(kKernel, f, 2));
    if (!first) layers.push_back(LayerSpec::batch_norm());
    layers.push_back(LayerSpec::leaky(kLeakySlope));
    first = false;
  }
  append_head(layers, kNumModes + 1);
  return layers;
}

// z -> projection to [len_4, base] -> four stride-2 fractionally-strided
// convolutions retracing the discriminator's length chain in reverse.
std::vector<LayerSpec> gan_generator(std::size_t seg_len, std::size_t base, std::array<std::size_t, 3> filters) {
  std::array<std::size_t, 5> len{};
  len[0] = seg_len;
  for (std::size_t i = 1; i < len.size(); ++i) len[i] = halve(len[i - 1]);

  std::vector<LayerSpec> layers;
  layers.push_back(LayerSpec::project(len[4], base));
  layers.push_back(LayerSpec::batch_norm());
  layers.push_back(LayerSpec::leaky(kLeakySlope));
  for (std::size_t i = 0; i < filters.size(); ++i) {
    layers.push_back(LayerSpec::frac_conv(kKernel, filters[i], 2, len[3 - i]));
    layers.push_back(LayerSpec::batch_norm());
    layers.push_back(LayerSpec::leaky(kLeakySlope));
  }
  layers.push_back(LayerSpec::frac_conv(kKernel, geokin::kNumChannels, 2, len[0]));
  layers.push_back(LayerSpec::tanh_act());
  return layers;
}

std::size_t flatten_depth(const std::vector<LayerSpec>& layers) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::flatten) return i + 1;
  }
  throw std::logic_error("model has no flatten layer");
}

}  // namespace

std::string_view to_string(ModelId id) {
  static constexpr std::array<std::string_view, 5> names = {"A", "B", "C", "D", "E"};
  return names[static_cast<std::size_t>(id)];
}

ModelId parse_model_id(std::string_view s) {
  if (s.size() == 1) {
    const char c = static_cast<char>(s[0] & ~0x20);  // upper-case
    if (c >= 'A' && c <= 'E') return static_cast<ModelId>(c - 'A');
  }
  throw ConfigError("unknown model id '" + std::string(s) + "' (expected A, B, C, D or E)");
}

ModelSpec build_model(ModelId id, std::size_t seg_len) {
  if (seg_len < 2) throw ConfigError("segment length must be at least 2");
  ModelSpec spec;
  spec.id = id;
  spec.input_shape = {seg_len, geokin::kNumChannels};
  switch (id) {
    case ModelId::A: spec.discriminator = cnn_classifier({32, 64, 128}); break;
    case ModelId::B: spec.discriminator = cnn_classifier({128, 256, 512}); break;
    case ModelId::C: spec.discriminator = cnn_classifier({96, 256, 384, 384, 256}); break;
    case ModelId::D:
      spec.discriminator = gan_discriminator({32, 64, 128});
      spec.generator = gan_generator(seg_len, 256, {128, 64, 32});
      break;
    case ModelId::E:
      spec.discriminator = gan_discriminator({128, 256, 512});
      spec.generator = gan_generator(seg_len, 1024, {512, 256, 128});
      break;
  }
  spec.num_outputs = spec.is_gan() ? kNumModes + 1 : kNumModes;
  spec.feature_depth = flatten_depth(spec.discriminator);
  return spec;
}

std::vector<std::string> table_tokens(std::span<const LayerSpec> layers) {
  std::vector<std::string> out;
  for (const LayerSpec& l : layers) {
    switch (l.kind) {
      case LayerKind::conv1d: out.push_back("CONV" + std::to_string(l.kernel) + "-" + std::to_string(l.filters)); break;
      case LayerKind::maxpool1d: out.push_back("MAXPOOL" + std::to_string(l.kernel)); break;
      case LayerKind::frac_conv1d:
        out.push_back("FS-CONV" + std::to_string(l.kernel) + "-" + std::to_string(l.filters));
        break;
      case LayerKind::dense: out.push_back("FC"); break;
      case LayerKind::project_reshape: out.push_back("Projection&reshape"); break;
      default: break;
    }
  }
  return out;
}

template <typename T>
nn::Network<T> make_discriminator(const ModelSpec& spec) {
  return nn::Network<T>(spec.discriminator, spec.input_shape);
}

template <typename T>
nn::Network<T> make_generator(const ModelSpec& spec) {
  if (!spec.generator) throw ConfigError("model " + std::string(to_string(spec.id)) + " has no generator");
  return nn::Network<T>(*spec.generator, {spec.noise_dim});
}

template <typename T>
nn::Tensor<T> make_batch(std::span<const Segment> segments, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty batch");
  const std::size_t seg_len = segments[indices[0]].seg_len;
  const std::size_t per = seg_len * geokin::kNumChannels;
  nn::Tensor<T> out({indices.size(), seg_len, geokin::kNumChannels});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Segment& s = segments[indices[b]];
    if (s.seg_len != seg_len) throw std::invalid_argument("make_batch: mixed segment lengths");
    std::copy(s.values.begin(), s.values.end(), out.ptr() + b * per);
  }
  return out;
}

template <typename T>
nn::Tensor<T> sample_noise(std::size_t batch, std::size_t dim, Rng& rng) {
  nn::Tensor<T> z({batch, dim});
  for (T& v : z.data()) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  return z;
}

template <typename T>
nn::Tensor<T> discriminator_forward(const ModelSpec& spec, nn::Network<T>& net, const nn::Tensor<T>& batch,
                                    const nn::ForwardContext& ctx) {
  nn::Tensor<T> logits = net.forward(batch, ctx);
  if (logits.rank() != 2 || logits.dim(1) != spec.num_outputs) {
    throw std::invalid_argument("discriminator produced " + nn::to_string(logits.shape()));
  }
  return logits;
}

template <typename T>
nn::Tensor<T> generator_forward(const ModelSpec& spec, nn::Network<T>& net, const nn::Tensor<T>& z,
                                const nn::ForwardContext& ctx) {
  if (z.rank() != 2 || z.dim(1) != spec.noise_dim) throw std::invalid_argument("generator expects [B, noise_dim] input");
  return net.forward(z, ctx);
}

#define TRAJGAN_INSTANTIATE_MODELS(T)                                                                               \
  template nn::Network<T> make_discriminator<T>(const ModelSpec&);                                                 \
  template nn::Network<T> make_generator<T>(const ModelSpec&);                                                     \
  template nn::Tensor<T> make_batch<T>(std::span<const Segment>, std::span<const std::size_t>);                    \
  template nn::Tensor<T> sample_noise<T>(std::size_t, std::size_t, Rng&);                                          \
  template nn::Tensor<T> discriminator_forward<T>(const ModelSpec&, nn::Network<T>&, const nn::Tensor<T>&,         \
                                                  const nn::ForwardContext&);                                      \
  template nn::Tensor<T> generator_forward<T>(const ModelSpec&, nn::Network<T>&, const nn::Tensor<T>&,             \
                                              const nn::ForwardContext&);

TRAJGAN_INSTANTIATE_MODELS(float)
TRAJGAN_INSTANTIATE_MODELS(double)

}  // namespace trajgan
