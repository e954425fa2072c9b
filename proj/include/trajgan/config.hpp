#pragma once

// JSON config files. One object may carry both TrainConfig and SynthConfig
// fields; each reader takes the keys it knows and a key known to neither
// is rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "trajgan/synth.hpp"
#include "trajgan/train.hpp"

namespace trajgan {

nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const synth::SynthConfig& config);

// Starts from `base` and overrides the fields present in j. Throws
// ConfigError on bad types or values.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
synth::SynthConfig synth_config_from_json(const nlohmann::json& j, synth::SynthConfig base = {});

// Throws ConfigError for a missing file, malformed JSON, a non-object or
// an unknown key.
nlohmann::json read_config_file(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
// 16 hex digits of FNV-1a over the compact dump.
std::string config_digest(const nlohmann::json& j);

std::string_view to_string(SupervisedLossKind kind);
std::string_view to_string(GeneratorObjective objective);

}  // namespace trajgan
