#pragma once

// Seeded generator of labeled single-mode GPS trips.

#include <array>
#include <cstdint>
#include <vector>

#include "trajgan/corpus.hpp"

namespace trajgan::synth {

// Kinematic behaviour of one travel mode. Cruise speed follows an
// Ornstein-Uhlenbeck process with the given mean/std and correlation time;
// the vehicle tracks it subject to max_accel. Stops are either Poisson
// (stop_rate_per_min) or scheduled (periodic_stop_*; 0 disables).
struct ModeProfile {
  double speed_mean = 1.4;  // m/s
  double speed_std = 0.3;   // m/s
  double speed_tau_s = 10.0;
  double max_accel = 1.0;  // m/s^2
  double stop_rate_per_min = 0.0;
  double periodic_stop_min_s = 0.0;  // spacing between scheduled stops
  double periodic_stop_max_s = 0.0;
  double stop_min_s = 0.0;  // dwell time
  double stop_max_s = 0.0;
  double heading_std_deg_s = 5.0;  // heading random-walk std per sqrt(second)
};

struct SynthConfig {
  std::array<std::size_t, kNumModes> n_trips{192, 426, 371, 764};
  double hz = 1.0;
  double duration_min_s = 60.0;
  double duration_max_s = 240.0;
  std::array<ModeProfile, kNumModes> profiles = default_profiles();
  double gps_noise_m = 5.0;
  double gps_noise_corr_s = 200.0;  // correlation time of positional error
  double origin_lat_deg = 45.5017;
  double origin_lon_deg = -73.5673;
  double origin_spread_m = 5000.0;
  double start_epoch_s = 1478000000.0;
  std::uint64_t seed = 7;

  static std::array<ModeProfile, kNumModes> default_profiles();
};

// Throws ConfigError when a field is out of range.
void validate(const SynthConfig& config);

// Trips are ordered by mode (walk, bike, transit, car) then index; trip i
// draws from its own stream seeded by (seed, i).
std::vector<Trip> generate_corpus(const SynthConfig& config);

Trip generate_trip(const SynthConfig& config, Mode mode, std::size_t trip_index, std::size_t global_index);

}  // namespace trajgan::synth
