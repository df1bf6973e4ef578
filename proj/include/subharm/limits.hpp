#pragma once

#include <Eigen/SVD>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "subharm/indicators.hpp"
#include "subharm/mass_distribution.hpp"
#include "subharm/potentials.hpp"

namespace subharm {

// P_t z = t e^{i gamma log t} z.
inline cplx dilation(double t, double gamma) { return std::polar(t, gamma * std::log(t)); }

inline plane_field scale_transform(const plane_field& u, const proximate_order& po, double t, double gamma = 0.0) {
  if (!(t > 0)) throw input_error("scale_transform: t must be positive");
  cplx P = dilation(t, gamma);
  double w = po.V(t);
  return {[u, P, w](cplx z) { return u(P * z) / w; }};
}

inline mass_distribution scale_transform(const mass_distribution& mu, const proximate_order& po, double t, double gamma = 0.0) {
  if (!(t > 0)) throw input_error("scale_transform: t must be positive");
  cplx P = dilation(t, gamma);
  double w = po.V(t);
  std::vector<atom> v;
  v.reserve(mu.size());
  for (const auto& a : mu.atoms()) v.push_back({a.z / P, a.mass / w});
  return mass_distribution(std::move(v));
}

struct density_estimate {
  double upper, lower;
  bool exists;
};

// mu_t(sector of radius 1) = t^{-rho(t)} mu(P_t sector) over the top decade of t_grid.
inline density_estimate sector_density(const mass_distribution& mu, const proximate_order& po, double alpha, double beta,
                                       const std::vector<double>& t_grid, double gamma = 0.0) {
  if (!(beta > alpha) || beta - alpha > two_pi) throw input_error("sector_density: need alpha < beta <= alpha + 2 pi");
  if (t_grid.back() < 100 * t_grid.front() * (1 - 1e-12)) throw input_error("sector_density: t grid must span 2 decades");
  double hi = t_grid.back(), lo = hi / 10;
  density_estimate d{neg_inf, pos_inf, false};
  for (double t : t_grid) {
    if (t < lo * (1 - 1e-12)) continue;
    double a = alpha + gamma * std::log(t);
    double m = (beta - alpha >= two_pi ? mu.count(t) : mu.sector_mass(-1.0, t, a, beta - alpha)) / po.V(t);
    d.upper = std::max(d.upper, m);
    d.lower = std::min(d.lower, m);
  }
  d.exists = d.upper - d.lower <= 0.05 * d.upper;
  return d;
}

struct crg_result {
  bool regular;
  double gap;  // max (h - h_lower) / scale(h)
  indicator_result pair;
};

inline crg_result crg_test(const plane_field& u, const proximate_order& po, const std::vector<double>& t_grid, std::size_t nphi,
                           double tol, bool refine = true) {
  auto pr = indicator_pair(u, po, t_grid, nphi, refine);
  double g = 0;
  for (std::size_t i = 0; i < nphi; ++i) {
    double d = pr.h[i] - pr.h_lower[i];
    g = std::max(g, std::isfinite(d) ? d : pos_inf);
  }
  g /= pr.h.scale();
  return {g <= tol, g, std::move(pr)};
}

// mu_P = sum_k T^{k rho} (mu_star dilated by T^k), k in [k_lo, k_hi].
inline mass_distribution periodic_extension(const mass_distribution& mu_star, double T, double rho, int k_lo, int k_hi) {
  if (!(T > 1)) throw input_error("periodic_extension: T must exceed 1");
  for (const auto& a : mu_star.atoms()) {
    double r = std::abs(a.z);
    if (r < 1 || r >= T) throw input_error("periodic_extension: atom outside the annulus [1, T)");
  }
  std::vector<atom> v;
  for (int k = k_lo; k <= k_hi; ++k) {
    double s = std::pow(T, k), w = std::pow(T, k * rho);
    for (const auto& a : mu_star.atoms()) v.push_back({a.z * s, a.mass * w});
  }
  return mass_distribution(std::move(v));
}

struct chain_result {
  std::vector<std::vector<bool>> chain;  // chain[i][j]: an (eps, s)-chain runs from i to j
  bool recurrent;
};

// Edge i -> j iff dist(flow(i, t), j) < eps for some sampled t in [s, t_max].
inline chain_result chain_recurrence_test(std::size_t n, const std::function<double(std::size_t, std::size_t)>& dist,
                                          const std::function<std::size_t(std::size_t, int)>& flow, double eps, int s, int t_max) {
  std::vector<std::vector<bool>> R(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (int t = s; t <= t_max; ++t) {
      std::size_t f = flow(i, t);
      for (std::size_t j = 0; j < n; ++j)
        if (dist(f, j) < eps) R[i][j] = true;
    }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (R[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (R[k][j]) R[i][j] = true;
  bool rec = true;
  for (auto& row : R)
    for (bool b : row) rec = rec && b;
  return {R, rec};
}

struct ghat_value {
  cplx value;
  cplx closed_form;
  double discrepancy;
};

// Closed form pi cos((pi - |gamma|)(rho + is)) / ((rho + is) sin pi(rho + is)); advisory only.
inline cplx ghat_closed_form(double s, double gamma, double rho) {
  cplx w(rho, s);
  return pi * std::cos((pi - std::abs(gamma)) * w) / (w * std::sin(pi * w));
}

// int G_p(e^{t - i gamma}) e^{-rho t} e^{-i s t} dt over a window with tail below 1e-8.
inline cplx ghat_quadrature(double s, double gamma, double rho, int p, double L) {
  using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto part = [&](bool im) {
    auto f = [&](double t) {
      double g = primary_kernel_g(std::polar(std::exp(t), -gamma), p);
      if (!std::isfinite(g)) return 0.0;
      double e = g * std::exp(-rho * t);
      return im ? -e * std::sin(s * t) : e * std::cos(s * t);
    };
    double err = 0, total = 0;
    for (auto [a, b] : {std::pair{-L, -1.0}, {-1.0, 0.0}, {0.0, 1.0}, {1.0, L}}) total += gk::integrate(f, a, b, 20, 1e-12, &err);
    return total;
  };
  return {part(false), part(true)};
}

inline double ghat_window(double rho, int p) {
  double kappa = std::min(rho - p, p + 1 - rho);
  return (std::log(1e8) + 6.0) / kappa;
}

inline ghat_value ghat_transform(double s, double gamma, double rho, int p) {
  if (std::abs(rho - std::round(rho)) < 1e-12) throw input_error("ghat_transform: integer rho unsupported");
  cplx v = ghat_quadrature(s, gamma, rho, p, ghat_window(rho, p));
  cplx c = ghat_closed_form(s, gamma, rho);
  return {v, c, std::abs(v - c)};
}

inline std::vector<double> default_s_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 80; ++i) g.push_back(0.25 * i);
  return g;
}

// Single ray: theta - psi avoids (1 - (2k+1)/(2 rho)) pi, k >= 1. Several rays: full rank of [G^(s, theta_j - psi_k)].
inline bool ray_regularity_condition(const std::vector<double>& theta, const std::vector<double>& psi, double rho, int p,
                                     const std::vector<double>& s_grid = default_s_grid()) {
  if (theta.empty() || psi.empty()) throw input_error("ray_regularity_condition: empty ray list");
  if (std::abs(rho - std::round(rho)) < 1e-12) throw input_error("ray_regularity_condition: integer rho unsupported");
  if (psi.size() < theta.size()) return false;
  if (theta.size() == 1 && psi.size() == 1) {
    double d = theta[0] - psi[0];
    for (int k = 1; k < 1000; ++k) {
      double bad = (1 - (2.0 * k + 1) / (2 * rho)) * pi;
      if (bad < -4 * pi) break;
      if (std::abs(d - bad) < 1e-9) return false;
    }
    return true;
  }
  double L = ghat_window(rho, p);
  for (double s : s_grid) {
    Eigen::MatrixXcd M(theta.size(), psi.size());
    for (std::size_t j = 0; j < theta.size(); ++j)
      for (std::size_t k = 0; k < psi.size(); ++k) M(Eigen::Index(j), Eigen::Index(k)) = ghat_quadrature(s, theta[j] - psi[k], rho, p, L);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    auto sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > 1e-8 * sv(0)) ++rank;
    if (std::size_t(rank) < theta.size()) return false;
  }
  return true;
}

}  // namespace subharm
