#include "trajgan/nn/checkpoint.hpp"

#include <fstream>

#include "trajgan/bundle.hpp"
#include "trajgan/error.hpp"

namespace trajgan::nn {

using nlohmann::json;

namespace {

std::filesystem::path sibling(const std::filesystem::path& path, const char* suffix) {
  return std::filesystem::path(bundle_stem(path).string() + suffix);
}

}  // namespace

json to_json(const LayerSpec& s) {
  return {{"kind", to_string(s.kind)}, {"kernel", s.kernel},       {"stride", s.stride}, {"filters", s.filters},
          {"out_len", s.out_len},      {"keep_prob", s.keep_prob}, {"alpha", s.alpha}};
}

LayerSpec layer_spec_from_json(const json& j) {
  LayerSpec s;
  s.kind = parse_layer_kind(j.at("kind").get<std::string>());
  s.kernel = j.value("kernel", std::size_t{0});
  s.stride = j.value("stride", std::size_t{1});
  s.filters = j.value("filters", std::size_t{0});
  s.out_len = j.value("out_len", std::size_t{0});
  s.keep_prob = j.value("keep_prob", 1.0);
  s.alpha = j.value("alpha", 0.2);
  return s;
}

template <typename T>
void write_checkpoint(const std::filesystem::path& path, Network<T>& net, const CheckpointExtras& extras) {
  json m;
  m["format"] = "trajgan-checkpoint";
  m["version"] = 1;
  m["input_shape"] = net.input_shape();
  json layers = json::array();
  for (const LayerSpec& s : net.specs()) layers.push_back(to_json(s));
  m["layers"] = std::move(layers);

  json tensors = json::array();
  for (const char* role : {"param", "buffer"}) {
    const bool is_param = std::string(role) == "param";
    for (std::size_t i = 0; i < net.depth(); ++i) {
      Layer<T>& l = net.layer(i);
      const auto items = is_param ? l.parameters() : l.buffers();
      const auto names = is_param ? l.parameter_names() : l.buffer_names();
      for (std::size_t k = 0; k < items.size(); ++k) {
        tensors.push_back({{"layer", i}, {"name", names[k]}, {"role", role}, {"shape", items[k]->shape()}});
      }
    }
  }
  m["tensors"] = std::move(tensors);
  m["rng_state"] = extras.rng_state;
  if (extras.adam_t || extras.adam_config) {
    const AdamConfig c = extras.adam_config.value_or(AdamConfig{});
    m["adam"] = {{"t", extras.adam_t.value_or(0)}, {"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}};
  }
  m["metadata"] = extras.metadata;

  const auto stem = bundle_stem(path);
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  std::ofstream out(sibling(path, ".json"));
  if (!out) throw ConfigError("cannot write checkpoint " + sibling(path, ".json").string());
  out << m.dump(1) << '\n';

  const std::vector<T> snap = net.snapshot();
  write_f32_blob(sibling(path, ".f32"), std::vector<float>(snap.begin(), snap.end()));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(sibling(path, ".json"));
  if (!in) throw ConfigError("cannot open checkpoint " + sibling(path, ".json").string());
  Checkpoint c;
  try {
    c.manifest = json::parse(in);
    if (c.manifest.value("format", "") != "trajgan-checkpoint") throw ParseError("not a trajgan checkpoint");
    c.input_shape = c.manifest.at("input_shape").get<Shape>();
    for (const json& l : c.manifest.at("layers")) c.specs.push_back(layer_spec_from_json(l));
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
  c.values = read_f32_blob(sibling(path, ".f32"));
  return c;
}

template <typename T>
Network<T> load_network(const Checkpoint& c) {
  Network<T> net(c.specs, c.input_shape);
  const std::vector<T> values(c.values.begin(), c.values.end());
  try {
    net.restore(values);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("checkpoint blob: ") + e.what());
  }
  return net;
}

template void write_checkpoint<float>(const std::filesystem::path&, Network<float>&, const CheckpointExtras&);
template void write_checkpoint<double>(const std::filesystem::path&, Network<double>&, const CheckpointExtras&);
template Network<float> load_network<float>(const Checkpoint&);
template Network<double> load_network<double>(const Checkpoint&);

}  // namespace trajgan::nn
