#pragma once

// Segment bundle: `<name>.json` sidecar plus `<name>.f32` holding
// little-endian float32 values, row-major [segment][row][channel].

#include <filesystem>
#include <optional>
#include <vector>

#include "trajgan/corpus.hpp"

namespace trajgan {

struct SegmentBundle {
  std::size_t seg_len = 70;
  std::vector<Segment> segments;
  std::optional<NormStats> norm_stats;
};

// Strips a trailing .json/.f32 so either file name or the bare stem works.
std::filesystem::path bundle_stem(const std::filesystem::path& path);

void write_bundle(const std::filesystem::path& path, const SegmentBundle& bundle);
SegmentBundle read_bundle(const std::filesystem::path& path);

// Little-endian float32 blob helpers shared with checkpoints.
void write_f32_blob(const std::filesystem::path& path, const std::vector<float>& values);
std::vector<float> read_f32_blob(const std::filesystem::path& path);

}  // namespace trajgan
