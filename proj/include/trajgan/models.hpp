#pragma once

// The five architectures: CNN baselines A-C and semi-supervised GANs D-E
// (generator + K+1-way discriminator).

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajgan/corpus.hpp"
#include "trajgan/nn/network.hpp"

namespace trajgan {

enum class ModelId { A, B, C, D, E };

std::string_view to_string(ModelId id);
ModelId parse_model_id(std::string_view s);  // throws ConfigError

inline constexpr std::size_t kNoiseDim = 100;
inline constexpr std::size_t kDefaultSegLen = 70;
inline constexpr std::size_t kKernel = 8;

struct ModelSpec {
  ModelId id = ModelId::A;
  std::vector<nn::LayerSpec> discriminator;  // the classifier for A-C
  std::optional<std::vector<nn::LayerSpec>> generator;
  std::size_t num_classes = kNumModes;
  std::size_t num_outputs = kNumModes;  // kNumModes + 1 for GANs
  nn::Shape input_shape{kDefaultSegLen, geokin::kNumChannels};
  std::size_t noise_dim = kNoiseDim;
  std::size_t feature_depth = 0;  // discriminator layers up to the flattened last hidden features

  bool is_gan() const noexcept { return generator.has_value(); }
};

ModelSpec build_model(ModelId id, std::size_t seg_len = kDefaultSegLen);

// Architecture-table tokens (CONV8-32, MAXPOOL8, FS-CONV8-5, FC,
// Projection&reshape); normalization, activation, dropout and flatten
// layers are not listed.
std::vector<std::string> table_tokens(std::span<const nn::LayerSpec> layers);

template <typename T>
nn::Network<T> make_discriminator(const ModelSpec& spec);
template <typename T>
nn::Network<T> make_generator(const ModelSpec& spec);

// Stacks segment values into a [B, seg_len, 5] batch.
template <typename T>
nn::Tensor<T> make_batch(std::span<const Segment> segments, std::span<const std::size_t> indices);

// z ~ U[-1, 1]^dim per row.
template <typename T>
nn::Tensor<T> sample_noise(std::size_t batch, std::size_t dim, Rng& rng);

// Logits [B, num_outputs]; softmax is left to losses and metrics.
template <typename T>
nn::Tensor<T> discriminator_forward(const ModelSpec& spec, nn::Network<T>& net, const nn::Tensor<T>& batch,
                                    const nn::ForwardContext& ctx);

// Fake segments [B, seg_len, 5], tanh-bounded.
template <typename T>
nn::Tensor<T> generator_forward(const ModelSpec& spec, nn::Network<T>& net, const nn::Tensor<T>& z,
                                const nn::ForwardContext& ctx);

}  // namespace trajgan
