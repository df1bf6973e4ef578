#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace subharm {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

// Exit codes of the command line front end are tied to these.
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct infeasible_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int exit_code_of(const std::exception& e) {
  if (dynamic_cast<const input_error*>(&e)) return 2;
  if (dynamic_cast<const infeasible_error*>(&e)) return 4;
  return 3;
}

// Pairwise summation keeps the reduction order fixed and the error O(log n).
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 16) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}
inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(n == 1 ? a : a + (b - a) * double(i) / double(n - 1));
  return g;
}

// Log-uniform grid covering `decades` decades below `top` with `per_decade` points each.
inline std::vector<double> decade_grid(double top, int decades, int per_decade) {
  return log_grid(top * std::pow(10.0, -decades), top, std::size_t(decades * per_decade + 1));
}

inline std::vector<double> angle_grid(std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = two_pi * double(i) / double(n);
  return g;
}

inline bool is_pow2(std::size_t n) { return n && !(n & (n - 1)); }

// Minimizer of a unimodal f on [a,b].
template <class F>
double golden_min(F&& f, double a, double b, double tol = 1e-12, int max_it = 200) {
  const double g = (std::sqrt(5.0) - 1) / 2;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_it && (b - a) > tol * (1 + std::abs(a) + std::abs(b)); ++it) {
    if (fc <= fd) {
      b = d; d = c; fd = fc;
      c = b - g * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + g * (b - a); fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

template <class F>
double golden_max(F&& f, double a, double b, double tol = 1e-12, int max_it = 200) {
  return golden_min([&](double x) { return -f(x); }, a, b, tol, max_it);
}

inline double median3(double a, double b, double c) {
  return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

inline double wrap_angle(double phi) {
  double r = std::fmod(phi, two_pi);
  return r < 0 ? r + two_pi : r;
}

}  // namespace subharm
