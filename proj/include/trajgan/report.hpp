#pragma once

// Machine-readable run artifacts: loss trace CSV, metrics JSON, run
// manifest and the fake-vs-real summary report.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajgan/train.hpp"

namespace trajgan {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kLossCsvHeader = "step,supervised,unsupervised,total,generator";

// Values are printed with 17 significant digits so they parse back to the
// same doubles.
void write_loss_csv(std::ostream& os, const LossTrace& trace);
void write_loss_csv(const std::filesystem::path& path, const LossTrace& trace);
LossTrace read_loss_csv(const std::filesystem::path& path);  // throws ParseError

nlohmann::json metrics_to_json(const Metrics& m, ModelId model, const std::string& config_digest, std::uint64_t seed);
Metrics metrics_from_json(const nlohmann::json& j);

struct RunManifest {
  std::string command;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double duration_s = 0.0;
};

nlohmann::json to_json(const RunManifest& m);

// Writes `j` with two-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// Per-channel moments and mean lag-1 speed autocorrelation over valid rows.
struct SegmentSummary {
  std::size_t segments = 0;
  std::vector<double> mean;
  std::vector<double> stddev;
  double speed_autocorr = 0.0;
};

SegmentSummary summarize(std::span<const Segment> segments);
nlohmann::json to_json(const SegmentSummary& s);

}  // namespace trajgan
