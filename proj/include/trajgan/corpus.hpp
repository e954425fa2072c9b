#pragma once

// Trajectory ingestion, trip splitting, fixed-size segmentation,
// normalization and cross-validation fold assignment.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajgan/geokin.hpp"

namespace trajgan {

// Travel modes in class-index order. The discriminator's extra "fake"
// output sits at index kNumModes.
enum class Mode : int { walk = 0, bike = 1, transit = 2, car = 3 };

inline constexpr int kNumModes = 4;
inline constexpr int kFakeClass = kNumModes;
inline constexpr std::array<Mode, kNumModes> kAllModes = {Mode::walk, Mode::bike, Mode::transit, Mode::car};

std::string_view to_string(Mode m);
// Returns nullopt for the empty string; throws ConfigError for unknown names.
std::optional<Mode> parse_mode(std::string_view s);

inline int label_index(const std::optional<Mode>& m) { return m ? static_cast<int>(*m) : -1; }
std::optional<Mode> mode_from_index(int index);

// One row of a points CSV.
struct PointRecord {
  std::string trip_id;
  geokin::GpsPoint point;
  std::optional<Mode> mode;
};

inline constexpr std::string_view kPointsCsvHeader = "trip_id,t_epoch_s,lat_deg,lon_deg,mode";

// Parses `trip_id,t_epoch_s,lat_deg,lon_deg,mode` rows. Errors carry the
// 1-based line number.
std::vector<PointRecord> parse_points_csv(std::string_view text);
std::vector<PointRecord> read_points_csv(const std::filesystem::path& path);
void write_points_csv(std::ostream& os, std::span<const PointRecord> records);

struct Trip {
  std::string trip_id;
  std::vector<geokin::GpsPoint> points;
  std::optional<Mode> label;
};

inline constexpr double kDefaultGapSeconds = 180.0;

// Groups records by trip_id (first-appearance order) and starts a new trip
// whenever consecutive timestamps are more than gap_s apart. Pieces after
// the first are suffixed "#1", "#2", ... A label survives only if every
// source row carries the same one.
std::vector<Trip> split_trips(std::span<const PointRecord> records, double gap_s = kDefaultGapSeconds);

std::vector<PointRecord> to_point_records(std::span<const Trip> trips);

struct SegmentOptions {
  std::size_t seg_len = 70;
  std::size_t min_points = 10;
};

// A fixed-size window of channel rows. Rows at or past valid_len are zero.
struct Segment {
  std::size_t seg_len = 70;
  std::size_t valid_len = 0;
  std::vector<float> values;  // row-major [seg_len][kNumChannels]
  std::optional<Mode> label;
  std::string source_trip;

  float at(std::size_t row, std::size_t channel) const { return values[row * geokin::kNumChannels + channel]; }
  float& at(std::size_t row, std::size_t channel) { return values[row * geokin::kNumChannels + channel]; }
};

// Chunks channel rows into consecutive non-overlapping windows. The last
// partial window is zero-padded; windows with fewer than min_points valid
// rows are dropped.
std::vector<Segment> segmentize(std::string_view trip_id, std::optional<Mode> label,
                                std::span<const geokin::ChannelVector> rows, const SegmentOptions& options = {});

struct PrepareOptions {
  geokin::KinematicsOptions kinematics{};
  SegmentOptions segments{};
  unsigned threads = 1;
};

struct PrepareReport {
  std::size_t trips = 0;
  std::size_t trips_too_short = 0;
  std::size_t points_dropped = 0;
  std::size_t rows_discarded = 0;  // remainder rows below min_points
};

// derive_channels + segmentize over every trip. Output order follows trip
// order regardless of thread count.
std::vector<Segment> prepare_segments(std::span<const Trip> trips, const PrepareOptions& options,
                                      PrepareReport* report = nullptr);

struct NormStats {
  std::array<double, geokin::kNumChannels> mean{};
  std::array<double, geokin::kNumChannels> stddev{};
};

inline constexpr double kMinStddev = 1e-8;

// Population mean/stddev per channel over valid rows only.
NormStats fit_norm_stats(std::span<const Segment> segments);
NormStats fit_norm_stats(std::span<const Segment> segments, std::span<const std::size_t> indices);

// Z-scores valid rows; padding rows stay exactly zero.
Segment normalize(const Segment& segment, const NormStats& stats);

struct FoldAssignment {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold_of_segment;
  std::vector<int> fold_of_trip;  // indexed like trip_order
  std::vector<std::string> trip_order;

  std::vector<std::size_t> members(int fold) const;
  std::vector<std::size_t> complement(int fold) const;
};

// Shuffles distinct source trips with a seeded RNG and deals them to folds
// round-robin. Every segment inherits its trip's fold.
FoldAssignment assign_folds(std::span<const Segment> segments, int k = 5, std::uint64_t seed = 0);

}  // namespace trajgan
