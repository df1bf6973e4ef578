#pragma once

#include <optional>

#include "subharm/direction.hpp"
#include "subharm/field.hpp"
#include "subharm/kernels.hpp"
#include "subharm/scale.hpp"

namespace subharm {

struct indicator_result {
  direction_function h, h_lower;
  std::vector<std::size_t> flagged;  // directions where every sample was -inf
  double window_lo, window_hi;
};

// h = max, h_lower = min of u(t e^{i phi}) / t^{rho(t)} over the top decade of t_grid.
// With refine, the max is polished by golden section in log t around the best sample.
inline indicator_result indicator_pair(const plane_field& u, const proximate_order& po, const std::vector<double>& t_grid,
                                       std::size_t nphi, bool refine = true) {
  if (t_grid.size() < 64) throw input_error("indicator_pair: t grid needs at least 64 points");
  if (t_grid.back() < 100 * t_grid.front() * (1 - 1e-12)) throw input_error("indicator_pair: t grid must span 2 decades");
  double hi = t_grid.back(), lo = hi / 10;
  std::size_t first = 0;
  while (t_grid[first] < lo * (1 - 1e-12)) ++first;
  std::vector<double> h(nphi), hl(nphi);
  std::vector<std::size_t> flagged;
  std::vector<double> w(t_grid.size());
  for (std::size_t i = 0; i < nphi; ++i) {
    double phi = two_pi * double(i) / double(nphi);
    auto val = [&](double t) { return u(std::polar(t, phi)) / po.V(t); };
    std::size_t from = first ? first - 1 : 0;
    for (std::size_t k = from; k < t_grid.size(); ++k) w[k] = val(t_grid[k]);
    // one sample past the window so the last median has two neighbours
    double beyond = val(hi * hi / t_grid[t_grid.size() - 2]);
    double mx = neg_inf, mn = pos_inf;
    std::size_t arg = first;
    for (std::size_t k = first; k < t_grid.size(); ++k) {
      if (w[k] > mx) {
        mx = w[k];
        arg = k;
      }
      double a = w[k > 0 ? k - 1 : k], c = k + 1 < t_grid.size() ? w[k + 1] : beyond;
      mn = std::min(mn, median3(a, w[k], c));
    }
    if (mx == neg_inf) {
      flagged.push_back(i);
    } else if (refine) {
      double a = std::log(t_grid[arg > first ? arg - 1 : arg]);
      double b = std::log(t_grid[arg + 1 < t_grid.size() ? arg + 1 : arg]);
      if (b > a) {
        double x = golden_max([&](double s) { double v = val(std::exp(s)); return std::isfinite(v) ? v : -1e300; }, a, b, 1e-12);
        mx = std::max(mx, val(std::exp(x)));
      }
    }
    h[i] = mx;
    hl[i] = std::min(mn, mx);
  }
  return {direction_function(h, po.rho), direction_function(hl, po.rho), flagged, lo, hi};
}

struct tc_report {
  bool pass;
  double worst;  // most negative relation value
  std::size_t a, b, c;
};

// Fundamental relation h(a) sin r(c-b) + h(b) sin r(a-c) + h(c) sin r(b-a) >= 0 on grid triples a<b<c, span < pi/rho.
inline tc_report trig_convexity_check(const direction_function& h, double tol_rel = 1e-9, std::size_t stride = 1) {
  std::size_t n = h.size();
  double d = h.step(), rho = h.rho;
  for (double x : h.v)
    if (!std::isfinite(x)) throw input_error("trig_convexity_check: h must be finite");
  std::size_t K = std::min<std::size_t>(n - 1, std::size_t(std::ceil(pi / (rho * d))) - 1);
  while (K > 0 && rho * d * double(K) >= pi) --K;
  tc_report rep{true, pos_inf, 0, 0, 0};
  for (std::size_t L = 2; L <= K; L += (L < 8 ? 1 : stride)) {
    double sL = std::sin(rho * d * double(L));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 1; j < L; ++j) {
        double v = h[i] * std::sin(rho * d * double(L - j)) - h[i + j] * sL + h[i + L] * std::sin(rho * d * double(j));
        if (v < rep.worst) rep = {true, v, i, (i + j) % n, (i + L) % n};
      }
  }
  rep.pass = rep.worst >= -tol_rel * h.scale();
  return rep;
}

inline double trig_interpolant(double alpha, double beta, double ha, double hb, double rho, double phi) {
  double span = beta - alpha;
  if (!(span > 0) || rho * span >= pi) throw input_error("trig_interpolant: need 0 < beta - alpha < pi/rho");
  if (phi == alpha) return ha;
  if (phi == beta) return hb;
  return (ha * std::sin(rho * (beta - phi)) + hb * std::sin(rho * (phi - alpha))) / std::sin(rho * span);
}

// T_rho h = h'' + rho^2 h in the weak sense; density cell i is centered at phi_i.
inline circle_measure t_rho_measure(const direction_function& h) {
  std::size_t n = h.size();
  double d = h.step(), r2 = h.rho * h.rho;
  std::vector<double> D(n), absD(n);
  for (std::size_t i = 0; i < n; ++i) {
    D[i] = (h[i + 1] - 2 * h[i] + h[i + n - 1]) / d;
    absD[i] = std::abs(D[i]);
  }
  auto mid = absD;
  std::nth_element(mid.begin(), mid.begin() + std::ptrdiff_t(n / 2), mid.end());
  double thr = 5 * mid[n / 2] + 1e-12 * h.scale();
  circle_measure s;
  s.density.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (absD[i] > thr)
      s.atoms.emplace_back(h.phi(i), D[i] + r2 * h[i] * d);
    else
      s.density[i] = D[i] / d + r2 * h[i];
  }
  return s;
}

namespace detail {
inline double reduce_pm_pi(double x) {
  double r = x - two_pi * std::ceil((x - pi) / two_pi);
  return r <= -pi ? r + two_pi : r;
}

// int_a^b tilde_cos(rho, phi - psi - pi) dpsi with the wrap point psi = phi split out.
inline double tilde_cos_cell(double rho, double phi, double a, double b) {
  double cut = phi + two_pi * std::floor((a - phi) / two_pi) + two_pi;  // first wrap point > a
  double s = 0;
  for (auto [x0, x1] : {std::pair{a, std::min(b, cut)}, std::pair{std::min(b, cut), b}}) {
    if (x1 <= x0) continue;
    double m = 0.5 * (x0 + x1), tm = reduce_pm_pi(phi - m - pi);
    s += (std::sin(rho * (tm + (m - x0))) - std::sin(rho * (tm - (x1 - m)))) / rho;
  }
  return s;
}

// int_a^b K(phi - psi) dpsi with K(x) = (x mod 2pi) sin(rho x), integer rho.
inline double integer_kernel_cell(double rho, double phi, double a, double b) {
  auto F = [rho](double x) { return std::sin(rho * x) / (rho * rho) - x * std::cos(rho * x) / rho; };
  double cut = phi + two_pi * std::floor((a - phi) / two_pi) + two_pi;
  double s = 0;
  for (auto [x0, x1] : {std::pair{a, std::min(b, cut)}, std::pair{std::min(b, cut), b}}) {
    if (x1 <= x0) continue;
    double m = 0.5 * (x0 + x1), xm = wrap_angle(phi - m);
    s += F(xm + (m - x0)) - F(xm - (x1 - m));
  }
  return s;
}

inline double integer_kernel(double rho, double x) {
  double y = wrap_angle(x);
  return y * std::sin(rho * y);
}
}  // namespace detail

inline direction_function reconstruct_tcf(const circle_measure& s, double rho, std::size_t n = 0) {
  if (n == 0) n = std::max<std::size_t>(256, s.density.size());
  double cell = s.density.empty() ? 0.0 : s.cell();
  bool integer = std::abs(rho - std::round(rho)) < 1e-12;
  if (integer) {
    cplx m = 0;
    for (auto& a : s.atoms) m += a.second * std::polar(1.0, rho * a.first);
    for (std::size_t i = 0; i < s.density.size(); ++i) {
      double c = cell * double(i);
      m += s.density[i] * (std::polar(1.0, rho * (c + cell / 2)) - std::polar(1.0, rho * (c - cell / 2))) / cplx(0, rho);
    }
    if (std::abs(m) > 1e-8 * std::max(1.0, s.total_variation()))
      throw input_error("reconstruct_tcf: integer rho and the orthogonality condition fails");
  }
  return direction_function::sample(
      [&](double phi) {
        std::vector<double> terms;
        for (auto& a : s.atoms)
          terms.push_back(a.second * (integer ? detail::integer_kernel(rho, phi - a.first) : tilde_cos(rho, phi - a.first - pi)));
        for (std::size_t i = 0; i < s.density.size(); ++i) {
          if (s.density[i] == 0) continue;
          double c = cell * double(i);
          terms.push_back(s.density[i] * (integer ? detail::integer_kernel_cell(rho, phi, c - cell / 2, c + cell / 2)
                                                  : detail::tilde_cos_cell(rho, phi, c - cell / 2, c + cell / 2)));
        }
        double v = pairwise_sum(terms);
        return integer ? -v / (two_pi * rho) : v / (2 * rho * std::sin(pi * rho));
      },
      n, rho);
}

// Largest discrete rho-t.c. function below m; none when no minorant exists.
inline std::optional<direction_function> max_tc_minorant(const direction_function& m, double rho, int max_sweeps = 10000) {
  std::size_t n = m.size();
  double d = m.step(), scale = m.scale();
  std::size_t K = std::min<std::size_t>(n - 1, std::size_t(std::ceil(pi / (rho * d))));
  while (K > 0 && rho * d * double(K) >= pi) --K;
  std::vector<std::vector<double>> wl(K + 1), wr(K + 1);
  for (std::size_t L = 2; L <= K; ++L) {
    double sL = std::sin(rho * d * double(L));
    wl[L].resize(L);
    wr[L].resize(L);
    for (std::size_t j = 1; j < L; ++j) {
      wl[L][j] = std::sin(rho * d * double(L - j)) / sL;
      wr[L][j] = std::sin(rho * d * double(j)) / sL;
    }
  }
  std::vector<double> h = m.v;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0;
    for (std::size_t L = 2; L <= K; ++L)
      for (std::size_t i = 0; i < n; ++i) {
        double a = h[i], b = h[(i + L) % n];
        for (std::size_t j = 1; j < L; ++j) {
          double& x = h[(i + j) % n];
          double y = a * wl[L][j] + b * wr[L][j];
          if (y < x) {
            change = std::max(change, x - y);
            x = y;
          }
        }
      }
    if (*std::min_element(h.begin(), h.end()) < -1e6 * scale) return std::nullopt;
    if (change <= 1e-14 * scale) return direction_function(h, rho);
  }
  throw numeric_error("max_tc_minorant: no convergence after " + std::to_string(max_sweeps) + " sweeps");
}

// r h(phi) is minimal (rho = 1) iff the body with support h is a segment or a point.
inline bool minimality_test(const direction_function& h, double tol_rel = 1e-9) {
  direction_function h1(h.v, 1.0);
  if (!trig_convexity_check(h1, 1e-9).pass) throw input_error("minimality_test: h is not 1-trigonometrically convex");
  std::size_t n = h.size();
  double w = pos_inf;
  for (std::size_t i = 0; i < n / 2; ++i) w = std::min(w, h[i] + h[i + n / 2]);
  return w <= tol_rel * h.scale();
}

}  // namespace subharm
