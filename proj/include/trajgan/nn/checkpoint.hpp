#pragma once

// Parameter checkpoint: `<name>.json` manifest (layer specs, tensor shapes,
// rng state, Adam scalars) plus `<name>.f32`, the little-endian float32
// parameters followed by buffers in manifest order.

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "trajgan/nn/network.hpp"
#include "trajgan/nn/optim.hpp"

namespace trajgan::nn {

nlohmann::json to_json(const LayerSpec& spec);
LayerSpec layer_spec_from_json(const nlohmann::json& j);

struct CheckpointExtras {
  std::string rng_state;
  std::optional<std::uint64_t> adam_t;
  std::optional<AdamConfig> adam_config;
  nlohmann::json metadata = nlohmann::json::object();
};

template <typename T>
void write_checkpoint(const std::filesystem::path& path, Network<T>& net, const CheckpointExtras& extras = {});

struct Checkpoint {
  nlohmann::json manifest;
  std::vector<LayerSpec> specs;
  Shape input_shape;
  std::vector<float> values;
};

Checkpoint read_checkpoint(const std::filesystem::path& path);

template <typename T>
Network<T> load_network(const Checkpoint& checkpoint);

}  // namespace trajgan::nn
