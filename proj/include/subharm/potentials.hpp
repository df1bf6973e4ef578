#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "subharm/field.hpp"
#include "subharm/kernels.hpp"
#include "subharm/mass_distribution.hpp"
#include "subharm/scale.hpp"

namespace subharm {

// Pi(z, mu, p) = sum m_j G_p(z / z_j) over atoms with index in [first, last).
inline double canonical_potential_range(cplx z, const mass_distribution& mu, int p, std::size_t first, std::size_t last) {
  if (z == cplx(0.0, 0.0)) return 0.0;
  std::vector<double> terms;
  terms.reserve(last - first);
  for (std::size_t i = first; i < last; ++i) {
    const auto& a = mu.atoms()[i];
    double g = primary_kernel_g(z / a.z, p);
    if (g == neg_inf) {
      if (a.mass > 0) return neg_inf;
      continue;
    }
    terms.push_back(a.mass * g);
  }
  return pairwise_sum(terms);
}

inline double canonical_potential(cplx z, const mass_distribution& mu, int p) {
  return canonical_potential_range(z, mu, p, 0, mu.size());
}

inline plane_field potential_field(const mass_distribution& mu, int p) {
  return {[&mu, p](cplx z) { return canonical_potential(z, mu, p); }};
}

// Owning variant for fields that outlive the caller's measure.
inline plane_field potential_field(std::shared_ptr<const mass_distribution> mu, int p) {
  return {[mu, p](cplx z) { return canonical_potential(z, *mu, p); }};
}

// sup over |z| <= R0 of the potential of atoms beyond R.  The tail is harmonic in |z| < R,
// so the boundary circle carries the sup; interior circles are sampled as a check.
inline double tail_sup(const mass_distribution& mu, int p, double R, double R0, std::size_t nphi = 256) {
  if (!(R > 2 * R0)) throw input_error("tail_sup: need R > 2 R0");
  auto [lo, hi] = mu.annulus(R, pos_inf);
  if (lo == hi) return 0.0;
  double s = 0;
  for (double f : {0.25, 0.5, 0.75, 1.0})
    for (std::size_t j = 0; j < nphi; ++j)
      s = std::max(s, std::abs(canonical_potential_range(std::polar(f * R0, two_pi * double(j) / double(nphi)), mu, p, lo, hi)));
  return s;
}

// n(R)/R^{p+1} + (p+1) int_R^inf n(t)/t^{p+2} dt, the integrated-by-parts tail majorant.
inline double tail_majorant(const mass_distribution& mu, int p, double R) {
  double q = p + 2.0;
  double far = std::max(mu.max_radius(), R);
  double integral = detail::counting_moment(mu, R, far, q) + mu.total_mass() * std::pow(far, 1 - q) / (q - 1);
  return mu.count(R) / std::pow(R, p + 1) + (p + 1) * integral;
}

struct circle_stats {
  double mean, T, M;
  std::size_t excluded;
};

inline circle_stats circle_means(const plane_field& u, double r, std::size_t n) {
  if (n < 64) throw input_error("circle_means: need at least 64 angles");
  std::vector<double> vals, pos;
  vals.reserve(n);
  pos.reserve(n);
  double M = neg_inf;
  std::size_t bad = 0;
  for (std::size_t j = 0; j < n; ++j) {
    double v = u(std::polar(r, two_pi * double(j) / double(n)));
    if (!std::isfinite(v)) {
      ++bad;
      continue;
    }
    vals.push_back(v);
    pos.push_back(std::max(v, 0.0));
    M = std::max(M, v);
  }
  if (bad * 20 > n) throw numeric_error("circle_means: more than 5% of grid points at -inf");
  double k = double(vals.size());
  return {pairwise_sum(vals) / k, pairwise_sum(pos) / k, M, bad};
}

inline double jensen_privalov_residual(const mass_distribution& mu, int p, double r, std::size_t n = 2048) {
  if (mu.empty()) return 0.0;
  for (const auto& a : mu.atoms())
    if (std::abs(std::abs(a.z) - r) <= 1e-12 * r)
      throw input_error("jensen_privalov_residual: atom on the circle; shift r slightly");
  auto u = potential_field(mu, p);
  auto c = circle_means(u, r, n);
  if (c.excluded * 1024 >= n) throw numeric_error("jensen_privalov_residual: too many excluded grid points");
  return c.mean - u(0.0) - radial_counts(mu, r).N;
}

// Delta * int_0^inf t^rho K(t, phi) dt with K = -min(d/dt G_p^+(e^{i phi}/t), 0).
inline double goldberg_indicator_bound(double rho, int p, double Delta, double phi) {
  if (!(rho > 0) || std::abs(rho - std::round(rho)) < 1e-12) throw input_error("goldberg_indicator_bound: rho must be positive non-integer");
  if (p != int(std::floor(rho))) throw input_error("goldberg_indicator_bound: p must equal [rho]");
  if (Delta == 0) return 0.0;
  auto g = [&](double x) { return primary_kernel_g(std::polar(std::exp(-x), phi), p); };
  auto dg = [&](double x) {
    double t = std::exp(x), h = 1e-5 * t;
    auto gp = [&](double tt) { return std::max(primary_kernel_g(std::polar(1.0 / tt, phi), p), 0.0); };
    return (gp(t + h) - gp(t - h)) / (2 * h);
  };
  auto integrand = [&](double x) {
    double t = std::exp(x);
    return std::pow(t, rho + 1) * std::max(-dg(x), 0.0);
  };
  double kappa = std::min(rho - p, p + 1 - rho);
  double L = std::min(60.0, 25.0 / kappa);

  // Kinks of the integrand sit where G changes sign or G^+ turns; split the range there.
  auto raw_d = [&](double x) {
    double h = 1e-6;
    return (g(x + h) - g(x - h)) / (2 * h);
  };
  auto refine = [](auto&& f, double a, double b) {
    double fa = f(a);
    for (int i = 0; i < 60; ++i) {
      double m = 0.5 * (a + b), fm = f(m);
      if ((fm > 0) == (fa > 0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    return 0.5 * (a + b);
  };
  std::vector<double> cuts = {-L, 0.0, L};
  const double step = 0.01;
  double gx = g(-L), dx = raw_d(-L);
  for (double x = -L + step; x <= L; x += step) {
    double gn = g(x), dn = raw_d(x);
    if (std::isfinite(gn) && std::isfinite(gx) && (gn > 0) != (gx > 0)) cuts.push_back(refine(g, x - step, x));
    if (std::isfinite(dn) && std::isfinite(dx) && (dn > 0) != (dx > 0)) cuts.push_back(refine(raw_d, x - step, x));
    gx = gn;
    dx = dn;
  }
  std::sort(cuts.begin(), cuts.end());
  using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
  std::vector<double> parts;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] < 1e-14) continue;
    double err = 0;
    parts.push_back(gk::integrate(integrand, cuts[i], cuts[i + 1], 12, 1e-11, &err));
  }
  double s = pairwise_sum(parts);
  return Delta * s;
}

}  // namespace subharm
