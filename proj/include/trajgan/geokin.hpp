#pragma once

// Geodesic and kinematic math on a spherical Earth.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "trajgan/error.hpp"

namespace trajgan::geokin {

inline constexpr double kEarthRadiusM = 6'371'000.0;

// A GPS fix. Coordinates are radians; t is seconds since the epoch.
struct GpsPoint {
  double lat = 0.0;
  double lon = 0.0;
  double t = 0.0;
};

GpsPoint from_degrees(double lat_deg, double lon_deg, double t);
double to_degrees(double radians);
double to_radians(double degrees);

inline constexpr std::size_t kNumChannels = 5;

// Per-point kinematic channels, in bundle column order.
struct ChannelVector {
  double dist_prev = 0.0;     // m
  double speed = 0.0;         // m/s
  double accel = 0.0;         // m/s^2
  double jerk = 0.0;          // m/s^3
  double bearing_rate = 0.0;  // degrees

  std::array<double, kNumChannels> as_array() const {
    return {dist_prev, speed, accel, jerk, bearing_rate};
  }
};

inline constexpr std::array<const char*, kNumChannels> kChannelNames = {
    "dist_prev", "speed", "accel", "jerk", "bearing_rate"};

// Great-circle distance in meters (haversine, mean Earth radius).
double haversine_distance(const GpsPoint& p1, const GpsPoint& p2);

struct Bearing {
  double degrees = 0.0;     // [0, 360), clockwise from true north
  bool degenerate = false;  // p1 and p2 share coordinates; degrees is 0
};

// Initial bearing of the p1 -> p2 great circle.
Bearing bearing(const GpsPoint& p1, const GpsPoint& p2);

enum class BearingRateMode {
  folded,  // min(d, 360 - d), range [0, 180]
  raw,     // |b2 - b1|, range [0, 360)
};

double bearing_change(double b1_deg, double b2_deg, BearingRateMode mode = BearingRateMode::folded);

// Change of bearing across three consecutive fixes. A degenerate second
// bearing repeats the first, so it contributes 0.
double bearing_rate(const GpsPoint& p1, const GpsPoint& p2, const GpsPoint& p3,
                    BearingRateMode mode = BearingRateMode::folded);

// Physical bounds applied to each channel before output.
struct ChannelLimits {
  double max_dist_prev = 5000.0;
  double max_speed = 50.0;
  double max_abs_accel = 10.0;
  double max_abs_jerk = 10.0;
};

struct KinematicsOptions {
  BearingRateMode bearing_rate_mode = BearingRateMode::folded;
  ChannelLimits limits{};
};

struct DerivedChannels {
  std::vector<ChannelVector> rows;  // one per surviving point
  std::size_t dropped_points = 0;   // non-increasing timestamps removed
};

class TripTooShortError : public DataError {
 public:
  using DataError::DataError;
};

inline constexpr std::size_t kMinKinematicPoints = 4;

// Derives the five channels for every point of a time-ordered trip.
// Points whose timestamp does not strictly exceed the last kept timestamp
// are dropped. Slots whose finite difference is undefined (the first point
// for speed, the first two for acceleration, ...) are 0. Throws
// TripTooShortError if fewer than four points survive.
DerivedChannels derive_channels(std::span<const GpsPoint> points,
                                const KinematicsOptions& options = {});

}  // namespace trajgan::geokin
