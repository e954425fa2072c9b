#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "trajgan/geokin.hpp"
#include "trajgan/rng.hpp"

using namespace trajgan;
using namespace trajgan::geokin;

namespace {

GpsPoint deg(double lat, double lon, double t = 0.0) { return from_degrees(lat, lon, t); }

// Fixes every second along a track that is invariant under the motion
// (meridian or parallel), so each consecutive pair is congruent.
std::vector<GpsPoint> steady_track(double lat0, double lon0, double d_lat_deg, double d_lon_deg, std::size_t n) {
  std::vector<GpsPoint> pts;
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back(deg(lat0 + d_lat_deg * static_cast<double>(i), lon0 + d_lon_deg * static_cast<double>(i),
                      1000.0 + static_cast<double>(i)));
  }
  return pts;
}

}  // namespace

TEST_CASE("one degree of longitude on the equator") {
  CHECK(std::abs(haversine_distance(deg(0, 0), deg(0, 1)) - 111194.93) < 0.01);
}

TEST_CASE("identical points are zero distance and a degenerate bearing") {
  const GpsPoint p = deg(45.5, -73.5);
  CHECK(haversine_distance(p, p) == 0.0);
  const Bearing b = bearing(p, p);
  CHECK(b.degenerate);
  CHECK(b.degrees == 0.0);
}

TEST_CASE("haversine and bearing agree with the vector-algebra oracle on random pairs") {
  Rng rng(20240611);
  double worst_dist = 0.0;
  double worst_bearing = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double lat1 = std::asin(rng.uniform(-1.0, 1.0));
    const double lat2 = std::asin(rng.uniform(-1.0, 1.0));
    const double lon1 = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double lon2 = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const GpsPoint a{lat1, lon1, 0};
    const GpsPoint b{lat2, lon2, 0};
    const double want = oracle::sphere_distance(lat1, lon1, lat2, lon2, kEarthRadiusM);
    worst_dist = std::max(worst_dist, std::abs(haversine_distance(a, b) - want) / want);
    double diff = std::abs(bearing(a, b).degrees - oracle::sphere_bearing_deg(lat1, lon1, lat2, lon2));
    diff = std::min(diff, 360.0 - diff);
    worst_bearing = std::max(worst_bearing, diff);
  }
  CHECK(worst_dist < 1e-9);
  CHECK(worst_bearing < 1e-9);
}

TEST_CASE("cardinal bearings") {
  CHECK(std::abs(bearing(deg(10, 20), deg(11, 20)).degrees - 0.0) < 1e-9);
  CHECK(std::abs(bearing(deg(0, 20), deg(0, 21)).degrees - 90.0) < 1e-9);
  CHECK(std::abs(bearing(deg(10, 20), deg(9, 20)).degrees - 180.0) < 1e-9);
  CHECK(std::abs(bearing(deg(0, 20), deg(0, 19)).degrees - 270.0) < 1e-9);
}

TEST_CASE("bearing change folds across north") {
  CHECK(bearing_change(350.0, 10.0) == doctest::Approx(20.0));
  CHECK(bearing_change(10.0, 350.0) == doctest::Approx(20.0));
  CHECK(bearing_change(350.0, 10.0, BearingRateMode::raw) == doctest::Approx(340.0));
  CHECK(bearing_change(0.0, 180.0) == doctest::Approx(180.0));
  CHECK(bearing_change(90.0, 90.0) == 0.0);
}

TEST_CASE("bearing rate over three fixes") {
  // north then east: a right angle
  const double r = bearing_rate(deg(0, 0), deg(0.001, 0), deg(0.001, 0.001));
  CHECK(r == doctest::Approx(90.0).epsilon(1e-4));
  // a repeated middle point carries the previous bearing
  CHECK(bearing_rate(deg(0, 0), deg(0.001, 0), deg(0.001, 0)) == 0.0);
}

TEST_CASE("constant-velocity tracks have zero acceleration, jerk and bearing rate") {
  const std::vector<std::vector<GpsPoint>> tracks = {
      steady_track(45.0, -73.0, 1e-4, 0.0, 60),   // due north, ~11 m/s
      steady_track(0.0, 10.0, 0.0, 2e-4, 60),     // equator, due east
      steady_track(45.0, -73.0, 0.0, -3e-4, 60),  // parallel at 45 N, due west
      steady_track(-30.0, 5.0, -5e-5, 0.0, 60),   // due south
  };
  for (const auto& t : tracks) {
    const auto ch = derive_channels(t);
    REQUIRE(ch.rows.size() == t.size());
    CHECK(ch.dropped_points == 0);
    for (std::size_t i = 3; i < ch.rows.size(); ++i) {
      CHECK(std::abs(ch.rows[i].accel) < 1e-6);
      CHECK(std::abs(ch.rows[i].jerk) < 1e-6);
      CHECK(std::abs(ch.rows[i].bearing_rate) < 1e-6);
      CHECK(ch.rows[i].speed == doctest::Approx(ch.rows[1].speed).epsilon(1e-9));
    }
  }
}

TEST_CASE("channels follow backward finite differences") {
  const std::vector<GpsPoint> pts = {deg(45, -73, 0), deg(45.0001, -73, 2), deg(45.00015, -73, 3),
                                     deg(45.00015, -72.9999, 5), deg(45.0002, -72.99985, 6)};
  const auto ch = derive_channels(pts);
  std::vector<double> v(pts.size(), 0.0);
  std::vector<double> a(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = oracle::sphere_distance(pts[i - 1].lat, pts[i - 1].lon, pts[i].lat, pts[i].lon, kEarthRadiusM);
    const double dt = pts[i].t - pts[i - 1].t;
    v[i] = d / dt;
    CHECK(ch.rows[i].dist_prev == doctest::Approx(d).epsilon(1e-9));
    CHECK(ch.rows[i].speed == doctest::Approx(v[i]).epsilon(1e-9));
    if (i >= 2) {
      a[i] = (v[i] - v[i - 1]) / dt;
      CHECK(ch.rows[i].accel == doctest::Approx(a[i]).epsilon(1e-9));
    }
    if (i >= 3) CHECK(ch.rows[i].jerk == doctest::Approx((a[i] - a[i - 1]) / dt).epsilon(1e-9));
  }
  // leading undefined slots are zero
  CHECK(ch.rows[0].as_array() == std::array<double, 5>{0, 0, 0, 0, 0});
  CHECK(ch.rows[1].accel == 0.0);
  CHECK(ch.rows[1].bearing_rate == 0.0);
  CHECK(ch.rows[2].jerk == 0.0);
  CHECK(ch.rows[3].bearing_rate == doctest::Approx(90.0).epsilon(1e-3));
}

TEST_CASE("channels are clamped to physical limits") {
  // 1 degree of latitude (~111 km) in one second, then back
  const std::vector<GpsPoint> pts = {deg(0, 0, 0), deg(0, 0.0001, 1), deg(1, 0.0001, 2), deg(1, 0.0002, 3),
                                     deg(1, 0.0003, 4)};
  const auto ch = derive_channels(pts);
  const ChannelLimits lim;
  for (const auto& r : ch.rows) {
    CHECK(r.dist_prev <= lim.max_dist_prev);
    CHECK(r.speed <= lim.max_speed);
    CHECK(std::abs(r.accel) <= lim.max_abs_accel);
    CHECK(std::abs(r.jerk) <= lim.max_abs_jerk);
  }
  CHECK(ch.rows[2].dist_prev == lim.max_dist_prev);
  CHECK(ch.rows[2].speed == lim.max_speed);
  CHECK(ch.rows[2].accel == lim.max_abs_accel);
}

TEST_CASE("non-increasing timestamps are dropped") {
  const std::vector<GpsPoint> pts = {deg(0, 0, 0), deg(0, 0.0001, 1), deg(0, 0.0002, 1), deg(0, 0.0002, 0.5),
                                     deg(0, 0.0003, 2), deg(0, 0.0004, 3)};
  const auto ch = derive_channels(pts);
  CHECK(ch.dropped_points == 2);
  CHECK(ch.rows.size() == 4);
}

TEST_CASE("fewer than four usable points is an error") {
  const std::vector<GpsPoint> pts = {deg(0, 0, 0), deg(0, 0.0001, 1), deg(0, 0.0002, 2), deg(0, 0.0003, 2)};
  CHECK_THROWS_AS(derive_channels(pts), TripTooShortError);
}

TEST_CASE("channel values stay finite on random jittery trips") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GpsPoint> pts;
    double t = 0.0;
    double lat = rng.uniform(-60, 60);
    double lon = rng.uniform(-170, 170);
    for (int i = 0; i < 40; ++i) {
      t += rng.uniform(0.2, 3.0);
      lat += rng.normal(0.0, 1e-4);
      lon += rng.normal(0.0, 1e-4);
      if (rng.uniform() < 0.1) pts.push_back(pts.empty() ? deg(lat, lon, t) : GpsPoint{pts.back().lat, pts.back().lon, t});
      else pts.push_back(deg(lat, lon, t));
    }
    const auto ch = derive_channels(pts);
    for (const auto& r : ch.rows) {
      for (double v : r.as_array()) CHECK(std::isfinite(v));
      CHECK(r.bearing_rate >= 0.0);
      CHECK(r.bearing_rate <= 180.0);
    }
  }
}
