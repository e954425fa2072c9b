#include "trajgan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "trajgan/error.hpp"
#include "trajgan/rng.hpp"

namespace trajgan::synth {

namespace {

constexpr double kMaxSynthSpeed = 45.0;
constexpr double kStopMarginS = 20.0;

// Moves `meters` along `heading_rad` on the sphere.
geokin::GpsPoint destination(const geokin::GpsPoint& p, double heading_rad, double meters) {
  const double delta = meters / geokin::kEarthRadiusM;
  const double sin_lat = std::sin(p.lat), cos_lat = std::cos(p.lat);
  const double lat = std::asin(sin_lat * std::cos(delta) + cos_lat * std::sin(delta) * std::cos(heading_rad));
  double lon = p.lon + std::atan2(std::sin(heading_rad) * std::sin(delta) * cos_lat,
                                  std::cos(delta) - sin_lat * std::sin(lat));
  lon = std::remainder(lon, 2.0 * std::numbers::pi);
  return {lat, lon, p.t};
}

geokin::GpsPoint offset(const geokin::GpsPoint& p, double east_m, double north_m) {
  geokin::GpsPoint q = p;
  q.lat = std::clamp(p.lat + north_m / geokin::kEarthRadiusM, -std::numbers::pi / 2, std::numbers::pi / 2);
  q.lon = std::remainder(p.lon + east_m / (geokin::kEarthRadiusM * std::max(std::cos(p.lat), 1e-6)),
                         2.0 * std::numbers::pi);
  return q;
}

}  // namespace

std::array<ModeProfile, kNumModes> SynthConfig::default_profiles() {
  std::array<ModeProfile, kNumModes> p{};
  // walk
  p[0] = {.speed_mean = 1.4, .speed_std = 0.3, .speed_tau_s = 20.0, .max_accel = 0.8,
          .stop_rate_per_min = 0.2, .stop_min_s = 3.0, .stop_max_s = 15.0, .heading_std_deg_s = 8.0};
  // bike
  p[1] = {.speed_mean = 4.5, .speed_std = 1.0, .speed_tau_s = 15.0, .max_accel = 1.2,
          .stop_rate_per_min = 0.3, .stop_min_s = 5.0, .stop_max_s = 20.0, .heading_std_deg_s = 5.0};
  // transit: scheduled stops every 60-120 s, 20-40 s dwell
  p[2] = {.speed_mean = 8.0, .speed_std = 3.0, .speed_tau_s = 15.0, .max_accel = 1.2,
          .periodic_stop_min_s = 60.0, .periodic_stop_max_s = 120.0, .stop_min_s = 20.0, .stop_max_s = 40.0,
          .heading_std_deg_s = 2.0};
  // car: signal stops
  p[3] = {.speed_mean = 12.0, .speed_std = 5.0, .speed_tau_s = 10.0, .max_accel = 3.0,
          .stop_rate_per_min = 0.8, .stop_min_s = 10.0, .stop_max_s = 40.0, .heading_std_deg_s = 3.0};
  return p;
}

void validate(const SynthConfig& c) {
  if (!(c.hz > 0.0)) throw ConfigError("synth: hz must be positive");
  if (!(c.duration_min_s > 0.0) || c.duration_max_s < c.duration_min_s) {
    throw ConfigError("synth: need 0 < duration_min_s <= duration_max_s");
  }
  if (c.gps_noise_m < 0.0 || !(c.gps_noise_corr_s > 0.0)) throw ConfigError("synth: invalid gps noise settings");
  if (std::fabs(c.origin_lat_deg) > 85.0 || std::fabs(c.origin_lon_deg) > 180.0) {
    throw ConfigError("synth: origin out of range");
  }
  for (const ModeProfile& p : c.profiles) {
    if (p.speed_mean <= 0.0 || p.speed_mean > kMaxSynthSpeed || p.speed_std < 0.0) {
      throw ConfigError("synth: speed profile outside (0, 45] m/s");
    }
    if (!(p.speed_tau_s > 0.0) || !(p.max_accel > 0.0) || p.stop_rate_per_min < 0.0 || p.stop_max_s < p.stop_min_s ||
        p.periodic_stop_max_s < p.periodic_stop_min_s || p.heading_std_deg_s < 0.0) {
      throw ConfigError("synth: invalid mode profile");
    }
  }
}

Trip generate_trip(const SynthConfig& config, Mode mode, std::size_t trip_index, std::size_t global_index) {
  const ModeProfile& prof = config.profiles[static_cast<std::size_t>(mode)];
  Rng rng(mix_seed(config.seed, global_index));
  const double dt = 1.0 / config.hz;

  const double duration = rng.uniform(config.duration_min_s, config.duration_max_s);
  const auto n_points = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(duration * config.hz)));

  Trip trip;
  char id[64];
  std::snprintf(id, sizeof id, "%s-%05zu", std::string(to_string(mode)).c_str(), trip_index);
  trip.trip_id = id;
  trip.label = mode;
  trip.points.reserve(n_points);

  geokin::GpsPoint pos = geokin::from_degrees(config.origin_lat_deg, config.origin_lon_deg, 0.0);
  pos = offset(pos, rng.normal(0.0, config.origin_spread_m), rng.normal(0.0, config.origin_spread_m));
  double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);

  const double ou_decay = std::exp(-dt / prof.speed_tau_s);
  const double ou_kick = prof.speed_std * std::sqrt(1.0 - ou_decay * ou_decay);
  double deviation = rng.normal(0.0, prof.speed_std);
  auto cruise_target = [&] { return std::clamp(prof.speed_mean + deviation, 0.1 * prof.speed_mean, kMaxSynthSpeed); };
  double speed = cruise_target();

  const double noise_decay = std::exp(-dt / config.gps_noise_corr_s);
  const double noise_kick = config.gps_noise_m * std::sqrt(1.0 - noise_decay * noise_decay);
  double noise_e = rng.normal(0.0, config.gps_noise_m);
  double noise_n = rng.normal(0.0, config.gps_noise_m);

  enum class Phase { cruising, braking, dwelling } phase = Phase::cruising;
  double dwell_left = 0.0;
  const bool periodic = prof.periodic_stop_max_s > 0.0;
  // scheduled stops start at a random phase of the interval
  double next_stop_in = periodic ? rng.uniform(0.0, rng.uniform(prof.periodic_stop_min_s, prof.periodic_stop_max_s)) : 0.0;
  const double stop_prob = 1.0 - std::exp(-prof.stop_rate_per_min / 60.0 * dt);
  const double heading_kick = geokin::to_radians(prof.heading_std_deg_s) * std::sqrt(dt);

  const double t0 = config.start_epoch_s + 3600.0 * static_cast<double>(global_index);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double t = t0 + static_cast<double>(i) * dt;
    trip.points.push_back(offset({pos.lat, pos.lon, t}, noise_e, noise_n));

    deviation = deviation * ou_decay + ou_kick * rng.normal();
    noise_e = noise_e * noise_decay + noise_kick * rng.normal();
    noise_n = noise_n * noise_decay + noise_kick * rng.normal();
    const double stop_draw = rng.uniform();
    const double heading_draw = rng.normal();

    switch (phase) {
      case Phase::cruising: {
        const double target = cruise_target();
        speed += std::clamp(target - speed, -prof.max_accel * dt, prof.max_accel * dt);
        bool stop = stop_draw < stop_prob;
        if (periodic) {
          next_stop_in -= dt;
          if (next_stop_in <= 0.0) stop = true;
        }
        // trips end on the move: no stop starts unless it can finish first
        const double remaining = static_cast<double>(n_points - 1 - i) * dt;
        const bool room = remaining > prof.stop_max_s + speed / prof.max_accel + kStopMarginS;
        if (stop && room && prof.stop_max_s > 0.0) phase = Phase::braking;
        break;
      }
      case Phase::braking:
        speed = std::max(0.0, speed - prof.max_accel * dt);
        if (speed == 0.0) {
          phase = Phase::dwelling;
          dwell_left = rng.uniform(prof.stop_min_s, prof.stop_max_s);
          if (periodic) next_stop_in = rng.uniform(prof.periodic_stop_min_s, prof.periodic_stop_max_s);
        }
        break;
      case Phase::dwelling:
        dwell_left -= dt;
        if (dwell_left <= 0.0) phase = Phase::cruising;
        break;
    }

    if (speed > 0.0) {
      heading += heading_kick * heading_draw;
      pos = destination(pos, heading, speed * dt);
    }
  }
  return trip;
}

std::vector<Trip> generate_corpus(const SynthConfig& config) {
  validate(config);
  std::vector<Trip> trips;
  std::size_t global = 0;
  for (Mode mode : kAllModes) {
    const std::size_t n = config.n_trips[static_cast<std::size_t>(mode)];
    for (std::size_t i = 0; i < n; ++i) trips.push_back(generate_trip(config, mode, i, global++));
  }
  return trips;
}

}  // namespace trajgan::synth
