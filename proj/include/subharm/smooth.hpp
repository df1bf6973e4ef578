#pragma once

// Compactly supported bump and the smooth steps built from it.

#include <boost/math/quadrature/gauss.hpp>

#include "subharm/core.hpp"

namespace subharm {

// exp(-1/(1-t^2)) on (-1,1), zero outside; unnormalized.
inline double bump(double t) {
  double s = 1.0 - t * t;
  return s <= 0 ? 0.0 : std::exp(-1.0 / s);
}

namespace detail {
inline double step_density(double y) { return bump(2.0 * y - 1.0); }
// int_0^x step_density for x <= 1/2. A single Gauss rule is off by ~1e-7 near the flat end;
// eight panels reach rounding.
inline double step_half_integral(double x) {
  double acc = 0;
  for (int i = 0; i < 8; ++i) acc += boost::math::quadrature::gauss<double, 20>::integrate(step_density, x * i / 8, x * (i + 1) / 8);
  return acc;
}
inline double step_norm() {
  static const double z = 2 * step_half_integral(0.5);
  return z;
}
}  // namespace detail

// C-infinity step: 0 for x <= 0, 1 for x >= 1.
inline double smooth_step(double x) {
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  double half = x <= 0.5 ? x : 1.0 - x;
  double v = detail::step_half_integral(half) / detail::step_norm();
  return x <= 0.5 ? v : 1.0 - v;
}

inline double smooth_step_d1(double x) {
  if (x <= 0 || x >= 1) return 0.0;
  return detail::step_density(x) / detail::step_norm();
}

inline double smooth_step_d2(double x) {
  if (x <= 0 || x >= 1) return 0.0;
  double t = 2 * x - 1, s = 1 - t * t;
  // d/dx exp(-1/s) = exp(-1/s) * (-2t/s^2) * 2
  return detail::step_density(x) * (-4.0 * t / (s * s)) / detail::step_norm();
}

inline double max_abs_step_d1() { return smooth_step_d1(0.5); }

inline double max_abs_step_d2() {
  static const double m = [] {
    double best = 0;
    for (int i = 1; i < 4000; ++i) best = std::max(best, std::abs(smooth_step_d2(i / 4000.0)));
    return best * 1.01;
  }();
  return m;
}

// Normalized planar mollifier of radius eps: alpha(|x|/eps)/(eps^2 * c).
inline double planar_bump_norm() {
  static const double c = two_pi * boost::math::quadrature::gauss<double, 30>::integrate(
                                        [](double r) { return bump(r) * r; }, 0.0, 1.0);
  return c;
}

}  // namespace subharm
