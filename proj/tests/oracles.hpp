#pragma once

// Reference implementations used only by tests. They take different
// routes from the library code (vector algebra on the unit sphere, direct
// scatter-form convolution, central finite differences).

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using Vec3 = std::array<double, 3>;

inline Vec3 unit(double lat, double lon) {
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Central angle via atan2(|n1 x n2|, n1 . n2), scaled by radius.
inline double sphere_distance(double lat1, double lon1, double lat2, double lon2, double radius) {
  const Vec3 a = unit(lat1, lon1);
  const Vec3 b = unit(lat2, lon2);
  return radius * std::atan2(norm(cross(a, b)), dot(a, b));
}

// Initial bearing in degrees [0, 360): the great-circle tangent at p1
// projected on the local north/east basis.
inline double sphere_bearing_deg(double lat1, double lon1, double lat2, double lon2) {
  const Vec3 a = unit(lat1, lon1);
  const Vec3 b = unit(lat2, lon2);
  const Vec3 north{-std::sin(lat1) * std::cos(lon1), -std::sin(lat1) * std::sin(lon1), std::cos(lat1)};
  const Vec3 east{-std::sin(lon1), std::cos(lon1), 0.0};
  const Vec3 tangent = cross(cross(a, b), a);
  double deg = std::atan2(dot(tangent, east), dot(tangent, north)) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 360.0;
  return deg;
}

// "Same" convolution (output length ceil(L / s), padding split with the
// odd element on the right) written as a scatter from inputs to outputs.
inline std::vector<double> conv1d(const std::vector<double>& x, std::size_t batch, std::size_t len, std::size_t cin,
                                  const std::vector<double>& w, std::size_t k, std::size_t cout,
                                  const std::vector<double>& bias, std::size_t stride) {
  const std::size_t out_len = (len + stride - 1) / stride;
  const long total_pad = std::max<long>(0, static_cast<long>((out_len - 1) * stride + k) - static_cast<long>(len));
  const long pad_left = total_pad / 2;
  std::vector<double> y(batch * out_len * cout, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out_len; ++o) {
      for (std::size_t co = 0; co < cout; ++co) y[(b * out_len + o) * cout + co] = bias.empty() ? 0.0 : bias[co];
    }
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t o = 0; o < out_len; ++o) {
        const long tap = static_cast<long>(i) - (static_cast<long>(o * stride) - pad_left);
        if (tap < 0 || tap >= static_cast<long>(k)) continue;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t co = 0; co < cout; ++co) {
            y[(b * out_len + o) * cout + co] +=
                x[(b * len + i) * cin + ci] * w[(static_cast<std::size_t>(tap) * cin + ci) * cout + co];
          }
        }
      }
    }
  }
  return y;
}

// Central-difference derivative of f with respect to every entry of x.
inline std::vector<double> numeric_gradient(std::vector<double>& x, const std::function<double()>& f,
                                            double eps = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = f();
    x[i] = keep - eps;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

// Elementwise relative error with an absolute floor on the denominator.
inline double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                                 double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

}  // namespace oracle
