#include "trajgan/geokin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace trajgan::geokin {

namespace {

double clamp_abs(double v, double limit) { return std::clamp(v, -limit, limit); }

}  // namespace

double to_degrees(double radians) { return radians * 180.0 / std::numbers::pi; }
double to_radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

GpsPoint from_degrees(double lat_deg, double lon_deg, double t) {
  return {to_radians(lat_deg), to_radians(lon_deg), t};
}

double haversine_distance(const GpsPoint& p1, const GpsPoint& p2) {
  const double sin_dlat = std::sin(0.5 * (p2.lat - p1.lat));
  const double sin_dlon = std::sin(0.5 * (p2.lon - p1.lon));
  const double a = sin_dlat * sin_dlat + std::cos(p1.lat) * std::cos(p2.lat) * sin_dlon * sin_dlon;
  return 2.0 * kEarthRadiusM * std::atan2(std::sqrt(a), std::sqrt(std::max(0.0, 1.0 - a)));
}

Bearing bearing(const GpsPoint& p1, const GpsPoint& p2) {
  if (p1.lat == p2.lat && p1.lon == p2.lon) return {0.0, true};
  const double dlon = p2.lon - p1.lon;
  // north and east components of the initial direction
  const double x = std::cos(p1.lat) * std::sin(p2.lat) - std::sin(p1.lat) * std::cos(p2.lat) * std::cos(dlon);
  const double y = std::sin(dlon) * std::cos(p2.lat);
  double deg = to_degrees(std::atan2(y, x));
  if (deg < 0.0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return {deg, false};
}

double bearing_change(double b1_deg, double b2_deg, BearingRateMode mode) {
  const double d = std::fabs(b2_deg - b1_deg);
  if (mode == BearingRateMode::raw) return d;
  return std::min(d, 360.0 - d);
}

double bearing_rate(const GpsPoint& p1, const GpsPoint& p2, const GpsPoint& p3, BearingRateMode mode) {
  const Bearing first = bearing(p1, p2);
  const Bearing second = bearing(p2, p3);
  if (first.degenerate || second.degenerate) return 0.0;
  return bearing_change(first.degrees, second.degrees, mode);
}

DerivedChannels derive_channels(std::span<const GpsPoint> points, const KinematicsOptions& options) {
  DerivedChannels out;
  std::vector<GpsPoint> kept;
  kept.reserve(points.size());
  for (const GpsPoint& p : points) {
    if (!kept.empty() && !(p.t > kept.back().t)) {
      ++out.dropped_points;
      continue;
    }
    kept.push_back(p);
  }
  if (kept.size() < kMinKinematicPoints) {
    throw TripTooShortError("trip too short: " + std::to_string(kept.size()) +
                            " usable points, need " + std::to_string(kMinKinematicPoints));
  }

  const ChannelLimits& lim = options.limits;
  out.rows.resize(kept.size());
  // Bearing of the segment arriving at point i; carried forward over
  // degenerate (zero-length) segments.
  double prev_bearing = 0.0;
  bool have_prev_bearing = false;

  for (std::size_t i = 1; i < kept.size(); ++i) {
    ChannelVector& row = out.rows[i];
    const ChannelVector& prev = out.rows[i - 1];
    const double dt = kept[i].t - kept[i - 1].t;

    const double dist = haversine_distance(kept[i - 1], kept[i]);
    row.dist_prev = std::min(dist, lim.max_dist_prev);
    row.speed = std::min(dist / dt, lim.max_speed);
    if (i >= 2) row.accel = clamp_abs((row.speed - prev.speed) / dt, lim.max_abs_accel);
    if (i >= 3) row.jerk = clamp_abs((row.accel - prev.accel) / dt, lim.max_abs_jerk);

    const Bearing b = bearing(kept[i - 1], kept[i]);
    if (b.degenerate) continue;  // repeats the previous bearing: rate 0
    if (have_prev_bearing) row.bearing_rate = bearing_change(prev_bearing, b.degrees, options.bearing_rate_mode);
    prev_bearing = b.degrees;
    have_prev_bearing = true;
  }
  return out;
}

}  // namespace trajgan::geokin
