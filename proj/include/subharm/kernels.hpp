#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "subharm/core.hpp"

namespace subharm {

struct primary_value {
  cplx E;
  double G;
};

namespace detail {
// -Re sum_{k>p} z^k/k, used where the closed form cancels badly.
inline double gp_series(cplx z, int p) {
  cplx zk = z;
  for (int k = 0; k < p; ++k) zk *= z;
  double s = 0;
  for (int k = p + 1; k < 4000; ++k) {
    double t = (zk / double(k)).real();
    s -= t;
    if (std::abs(zk) < 1e-18 * k) break;
    zk *= z;
  }
  return s;
}
}  // namespace detail

// G_p(z) = log|1 - z| + Re sum_{k<=p} z^k/k.
inline double primary_kernel_g(cplx z, int p) {
  if (z == cplx(1.0, 0.0)) return neg_inf;
  double a = std::abs(z);
  if (a < 0.1) return detail::gp_series(z, p);
  double s = 0.5 * std::log1p(-2.0 * z.real() + a * a);
  cplx zk = 1.0;
  for (int k = 1; k <= p; ++k) {
    zk *= z;
    s += zk.real() / k;
  }
  return s;
}

inline primary_value primary_kernel(cplx z, int p) {
  if (p < 0) throw input_error("primary_kernel: p must be nonnegative");
  if (z == cplx(0.0, 0.0)) return {1.0, 0.0};
  if (z == cplx(1.0, 0.0)) return {0.0, neg_inf};
  cplx s = 0, zk = 1.0;
  for (int k = 1; k <= p; ++k) {
    zk *= z;
    s += zk / double(k);
  }
  return {(1.0 - z) * std::exp(s), primary_kernel_g(z, p)};
}

struct envelope_check {
  double A;
  bool pass;
  double worst_fine_ratio;
};

// |G_p(z)| against |z|^{p+1}/(1-|z|) (|z|<1/2 regime), log|1-z| type spike near 1, |z|^p outside.
inline double kernel_envelope(cplx z, int p) {
  double r = std::abs(z);
  if (r <= 0.5) return std::pow(r, p + 1);
  double near = std::abs(std::log(std::abs(1.0 - z)));
  if (r <= 2.0) return std::pow(r, p + 1) + near;
  return std::pow(r, p) + std::log(r);
}

inline envelope_check kernel_envelope_check(int p, double r_max, std::size_t nr, std::size_t nphi, double margin) {
  auto ratio_max = [&](std::size_t mr, std::size_t mphi) {
    double A = 0;
    for (std::size_t i = 1; i <= mr; ++i) {
      double r = r_max * double(i) / double(mr);
      for (std::size_t j = 0; j < mphi; ++j) {
        cplx z = std::polar(r, two_pi * double(j) / double(mphi));
        if (std::abs(z - 1.0) < margin) continue;
        A = std::max(A, std::abs(primary_kernel_g(z, p)) / kernel_envelope(z, p));
      }
    }
    return A;
  };
  double A = ratio_max(nr, nphi);
  double fine = ratio_max(4 * nr, 4 * nphi);
  // The fitted constant gets 10% headroom against interpolation between coarse nodes.
  return {A * 1.1, fine <= A * 1.1, fine};
}

// cos-Fourier coefficients of theta -> G_p(r e^{i theta}):
// a_0 = (1/2pi) int G, a_m = (1/pi) int G cos(m theta).
inline double circle_fourier_gp(int m, double r, int p) {
  if (m < 0 || p < 0 || !(r > 0)) throw input_error("circle_fourier_gp: bad arguments");
  if (r <= 1) {
    if (m <= p) return 0.0;
    return -std::pow(r, m) / m;
  }
  if (m == 0) return std::log(r);
  if (m <= p) return (std::pow(r, m) - std::pow(r, -m)) / m;
  return -std::pow(r, -m) / m;
}

// Same coefficient by adaptive quadrature; reference for the closed form.
inline double circle_fourier_gp_quadrature(int m, double r, int p, double tol = 1e-13) {
  auto f = [&](double t) {
    double g = primary_kernel_g(std::polar(r, t), p);
    return std::isfinite(g) ? g * std::cos(m * t) : 0.0;
  };
  double err = 0;
  double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, two_pi, 20, tol, &err);
  return m == 0 ? v / two_pi : v / pi;
}

// cos(rho phi0) with phi0 = phi reduced into (-pi, pi].
inline double tilde_cos(double rho, double phi) {
  double r = phi - two_pi * std::ceil((phi - pi) / two_pi);
  if (r <= -pi) r += two_pi;
  return std::cos(rho * r);
}

inline double green_disc(cplx z, cplx zeta, cplx a, double R) {
  if (z == zeta) return neg_inf;
  if (zeta == a) return std::log(std::abs(z - a) / R);
  if (z == a) return std::log(std::abs(zeta - a) / R);
  cplx star = a + R * R / std::conj(zeta - a);
  return std::log(std::abs(zeta - z) * R / (std::abs(zeta - a) * std::abs(z - star)));
}

// Poisson integral of uniform boundary samples on |z-a| = R.
inline double poisson_disc(const std::vector<double>& boundary, cplx a, double R, cplx z) {
  std::size_t n = boundary.size();
  if (n < 64) throw input_error("poisson_disc: need at least 64 boundary samples");
  double r = std::abs(z - a);
  if (!(r < R)) throw input_error("poisson_disc: point not inside the disc");
  double phi = std::arg(z - a);
  std::vector<double> w(n), wf(n);
  for (std::size_t k = 0; k < n; ++k) {
    double psi = two_pi * double(k) / double(n);
    w[k] = (R * R - r * r) / (R * R - 2 * R * r * std::cos(phi - psi) + r * r);
    wf[k] = w[k] * boundary[k];
  }
  // Normalizing by the discrete kernel mass makes constants exact.
  return pairwise_sum(wf) / pairwise_sum(w);
}

}  // namespace subharm
