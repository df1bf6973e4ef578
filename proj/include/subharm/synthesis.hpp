#pragma once

#include <map>
#include <memory>
#include <optional>

#include "subharm/field.hpp"
#include "subharm/indicators.hpp"
#include "subharm/limits.hpp"
#include "subharm/smooth.hpp"

namespace subharm {

// psi_k(r) = beta_k(r) - beta_{k+1}(r), psi_0 = 1 - beta_1, last psi = beta_K; beta_k is the
// smooth step in log r from r_k/sigma_k to r_k sigma_k. Everything is evaluated in s = log r.
class partition_of_unity {
 public:
  partition_of_unity(std::vector<double> log_r, std::vector<double> log_sigma) : s_(std::move(log_r)), ls_(std::move(log_sigma)) {
    if (s_.size() < 2 || ls_.size() != s_.size()) throw input_error("partition_of_unity: need matching sequences of length >= 2");
    if (s_[0] != 0) throw input_error("partition_of_unity: r_0 must be 1");
    for (std::size_t k = 1; k < s_.size(); ++k) {
      if (!(ls_[k] > 0)) throw input_error("partition_of_unity: sigma_" + std::to_string(k) + " must exceed 1");
      if (k > 1 && ls_[k] < ls_[k - 1]) throw input_error("partition_of_unity: sigma decreases at index " + std::to_string(k));
      if (k + 1 < s_.size() && !(s_[k] + ls_[k] < s_[k + 1] - ls_[k + 1]))
        throw input_error("partition_of_unity: r_k sigma_k < r_{k+1}/sigma_{k+1} fails at index " + std::to_string(k));
    }
    if (!(s_[1] - ls_[1] > 0)) throw input_error("partition_of_unity: r_1/sigma_1 must exceed r_0 at index 1");
  }

  // r_k = e^{k^2}, sigma_k = k+1
  static partition_of_unity standard(std::size_t K) {
    std::vector<double> s, l;
    for (std::size_t k = 0; k <= K; ++k) {
      s.push_back(double(k * k));
      l.push_back(std::log(double(k + 1)));
    }
    return {s, l};
  }
  // r_k = e^{kL}, constant sigma = e^{w/2}: transitions of width w in log r
  static partition_of_unity periodic(std::size_t K, double L, double w) {
    std::vector<double> s, l;
    for (std::size_t k = 0; k <= K; ++k) {
      s.push_back(L * double(k));
      l.push_back(w / 2);
    }
    return {s, l};
  }

  std::size_t size() const { return s_.size(); }
  double log_r(std::size_t k) const { return s_[k]; }
  double log_sigma(std::size_t k) const { return ls_[k]; }
  double width(std::size_t k) const { return 2 * ls_[k]; }

  double beta(std::size_t k, double s) const { return smooth_step((s - s_[k] + ls_[k]) / width(k)); }

  double psi_log(std::size_t k, double s) const {
    double up = k == 0 ? 1.0 : beta(k, s);
    double down = k + 1 < size() ? beta(k + 1, s) : 0.0;
    return up - down;
  }
  double psi(std::size_t k, double r) const { return psi_log(k, std::log(r)); }

  // r psi'(r) and r^2 psi''(r)
  double r_d1(std::size_t k, double r) const {
    double s = std::log(r), v = 0;
    if (k > 0) v += smooth_step_d1((s - s_[k] + ls_[k]) / width(k)) / width(k);
    if (k + 1 < size()) v -= smooth_step_d1((s - s_[k + 1] + ls_[k + 1]) / width(k + 1)) / width(k + 1);
    return v;
  }
  double r2_d2(std::size_t k, double r) const {
    double s = std::log(r), v = 0;
    auto term = [&](std::size_t i) {
      double x = (s - s_[i] + ls_[i]) / width(i), w = width(i);
      return smooth_step_d2(x) / (w * w) - smooth_step_d1(x) / w;
    };
    if (k > 0) v += term(k);
    if (k + 1 < size()) v -= term(k + 1);
    return v;
  }

  // Bound on max |r psi_k'| and max |r^2 psi_k''|.
  double gamma(std::size_t k) const {
    double g = 0;
    for (std::size_t i : {k, k + 1}) {
      if (i == 0 || i >= size()) continue;
      double w = width(i);
      g += std::max(max_abs_step_d1() / w, max_abs_step_d2() / (w * w) + max_abs_step_d1() / w);
    }
    return g;
  }

  // Indices with psi_k(e^s) != 0.
  std::vector<std::size_t> active(double s) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < size(); ++k) {
      double lo = k == 0 ? neg_inf : s_[k] - ls_[k];
      double hi = k + 1 < size() ? s_[k + 1] + ls_[k + 1] : pos_inf;
      if (s > lo && s < hi) out.push_back(k);
    }
    return out;
  }
  // support (r_k/sigma_k, r_{k+1} sigma_{k+1}) and plateau [r_k sigma_k, r_{k+1}/sigma_{k+1}] in log r
  std::pair<double, double> support(std::size_t k) const {
    return {k == 0 ? neg_inf : s_[k] - ls_[k], k + 1 < size() ? s_[k + 1] + ls_[k + 1] : pos_inf};
  }
  std::pair<double, double> plateau(std::size_t k) const {
    return {k == 0 ? neg_inf : s_[k] + ls_[k], k + 1 < size() ? s_[k + 1] - ls_[k + 1] : pos_inf};
  }

 private:
  std::vector<double> s_, ls_;
};

struct partition_report {
  double sum_error = 0;       // prtu1
  bool support_ok = true;     // prtu2
  bool plateau_ok = true;     // prtu3
  bool overlap_ok = true;     // prtu4
  bool gamma_ok = true;       // prtu5/6 against the stated gamma_k
  bool gamma_decreasing = true;
  std::vector<double> gamma, measured;
};

// Checks prtu1-prtu6 on a log-uniform grid; derivative maxima by central differences.
inline partition_report check_partition(const partition_of_unity& P, std::size_t per_unit = 200) {
  partition_report rep;
  std::size_t K = P.size();
  double s_lo = -1, s_hi = P.log_r(K - 1) + P.log_sigma(K - 1) + 1;
  auto n = std::size_t((s_hi - s_lo) * double(per_unit)) + 1;
  std::vector<double> meas(K, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = s_lo + (s_hi - s_lo) * double(i) / double(n - 1);
    double sum = 0;
    std::vector<double> vals(K);
    for (std::size_t k = 0; k < K; ++k) sum += vals[k] = P.psi_log(k, s);
    rep.sum_error = std::max(rep.sum_error, std::abs(sum - 1));
    for (std::size_t k = 0; k < K; ++k) {
      auto [a, b] = P.support(k);
      if (vals[k] != 0 && !(s > a && s < b)) rep.support_ok = false;
      auto [c, d] = P.plateau(k);
      if (s >= c && s <= d && vals[k] != 1.0) rep.plateau_ok = false;
      for (std::size_t l = k + 2; l < K; ++l)
        if (vals[k] != 0 && vals[l] != 0) rep.overlap_ok = false;
      // r d/dr = d/ds; r^2 d2/dr2 = d2/ds2 - d/ds
      double h = 1e-4;
      double fp = P.psi_log(k, s + h), fm = P.psi_log(k, s - h);
      double d1 = (fp - fm) / (2 * h), d2 = (fp - 2 * vals[k] + fm) / (h * h) - d1;
      meas[k] = std::max({meas[k], std::abs(d1), std::abs(d2)});
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    rep.gamma.push_back(P.gamma(k));
    if (meas[k] > rep.gamma.back() * (1 + 1e-6)) rep.gamma_ok = false;
  }
  rep.measured = meas;
  for (std::size_t k = 2; k + 1 < K; ++k)
    if (!(rep.gamma[k + 1] < rep.gamma[k])) rep.gamma_decreasing = false;
  return rep;
}

// Convex, decreasing, C-infinity majorant of a(s) -> -inf, built through the inverse of -a*:
// a piecewise linear convex majorant s1(b) with nondecreasing slopes on unit b-cells,
// smoothed by the unit bump, and k(s) = -s2^{-1}(s).
class convex_majorant {
 public:
  convex_majorant(const std::vector<double>& s, const std::vector<double>& a, double end_slope = 0.01) {
    if (s.size() < 4 || a.size() != s.size()) throw input_error("convex_majorant: need at least 4 samples");
    for (std::size_t i = 1; i < s.size(); ++i)
      if (!(s[i] > s[i - 1])) throw input_error("convex_majorant: s must increase");
    // a* = sup over the tail
    std::vector<double> star(a.size());
    star.back() = a.back();
    for (std::size_t i = a.size() - 1; i-- > 0;) star[i] = std::max(a[i], star[i + 1]);
    if (!(star.back() < star.front() - 1)) throw input_error("convex_majorant: a does not decrease towards -inf on the window");
    s0_ = s.front();
    s_end_ = s.back();
    b0_ = -star.front();
    double b_end = -star.back();
    // s(b) = largest s with -a*(s) <= b, a* interpolated linearly between samples;
    // need[c] = s at the right end of the cell [b0+c, b0+c+1]
    auto cells = std::size_t(std::ceil(b_end - b0_)) + 1;
    std::vector<double> need(cells + 1, s0_);
    std::size_t i = 0;
    for (std::size_t c = 0; c < need.size(); ++c) {
      double x = b0_ + double(c) + 1;
      while (i + 1 < s.size() && -star[i + 1] <= x) ++i;
      if (i + 1 == s.size()) {
        need[c] = s_end_;
      } else {
        double lo = -star[i], hi = -star[i + 1];
        need[c] = s[i] + (x - lo) / (hi - lo) * (s[i + 1] - s[i]);
      }
    }
    // s1 at the left end of each cell already covers the cell
    knots_.assign(1, std::max(s0_ + 1, need[0]));
    double slope = 1e-3;
    for (std::size_t c = 0; c + 1 < need.size() || knots_.back() < s_end_ + 2; ++c) {
      if (c + 1 < need.size()) slope = std::max(slope, need[c + 1] - knots_.back());
      slopes_.push_back(slope);
      knots_.push_back(knots_.back() + slope);
    }
    retune_end(end_slope);
  }

  double operator()(double s) const { return -inverse_s2(s); }
  double d1(double s) const { return -1.0 / s2_d1(inverse_s2(s)); }
  double d2(double s) const {
    double b = inverse_s2(s), p = s2_d1(b);
    return s2_d2(b) / (p * p * p);
  }
  double window_end() const { return s_end_; }
  double window_start() const { return s0_; }

  // smoothed s2 and its derivatives, in b
  double s2(double b) const {
    // s1 = affine + sum of kinks (slope jumps) at b0 + j; each kink (y - x)_+ smooths to F(b - x)
    double acc = s1(b);
    for (long j = long(std::floor(b - 1 - b0_)); j <= long(std::floor(b + 1 - b0_)) + 1; ++j) {
      double u = b - (b0_ + double(j));
      if (std::abs(u) < 1) acc += (slope_at(j) - slope_at(j - 1)) * (smoothed_ramp(u) - std::max(u, 0.0));
    }
    return acc;
  }
  double s2_d1(double b) const {
    // sum of slope_j times the bump mass over cell j
    double acc = 0;
    for (long j = long(std::floor(b - 1 - b0_)); j <= long(std::floor(b + 1 - b0_)); ++j) {
      double x0 = b0_ + double(j), x1 = x0 + 1;
      acc += slope_at(j) * (cum(b - x0) - cum(b - x1));
    }
    return acc;
  }
  double s2_d2(double b) const {
    double acc = 0;
    for (long j = long(std::floor(b - 1 - b0_)); j <= long(std::floor(b + 1 - b0_)) + 1; ++j)
      acc += (slope_at(j) - slope_at(j - 1)) * bump(b - (b0_ + double(j))) / bump_mass();
    return acc;
  }

 private:
  double s0_, s_end_, b0_;
  std::vector<double> knots_, slopes_;  // s1(b0 + j) = knots_[j]

  static double bump_mass() {
    static const double m = 2 * detail::step_norm();  // t = 2y - 1
    return m;
  }
  // int_{-1}^{y} bump / mass
  static double cum(double y) { return smooth_step((y + 1) / 2); }
  // int (u - t)_+ bump(t) dt / mass = u cum(u) - int_{-1}^{u} t bump(t) dt / mass; the odd moment
  // is taken over [-1, -|u|] in panels to stay accurate next to the flat end
  static double smoothed_ramp(double u) {
    if (u <= -1) return 0.0;
    if (u >= 1) return u;
    double e = -std::abs(u), m = 0;
    for (int i = 0; i < 8; ++i) {
      double x0 = -1 + (e + 1) * i / 8, x1 = -1 + (e + 1) * (i + 1) / 8;
      m += boost::math::quadrature::gauss<double, 20>::integrate([](double t) { return t * bump(t); }, x0, x1);
    }
    return u * cum(u) - m / bump_mass();
  }

  double slope_at(long j) const {
    if (j < 0) return slopes_.front();
    if (std::size_t(j) >= slopes_.size()) return slopes_.back();
    return slopes_[std::size_t(j)];
  }
  double s1(double b) const {
    double x = b - b0_;
    if (x <= 0) return knots_.front() + slopes_.front() * x;
    auto j = std::size_t(std::floor(x));
    if (j >= slopes_.size()) return knots_.back() + slopes_.back() * (x - double(slopes_.size()));
    return knots_[j] + slopes_[j] * (x - double(j));
  }
  double inverse_s2(double s) const {
    double lo = b0_ - 1, hi = b0_ + 1;
    while (s2(lo) > s) lo -= 2 * (hi - lo);
    while (s2(hi) < s) hi += 2 * (hi - lo);
    for (int it = 0; it < 200 && hi - lo > 1e-13 * (1 + std::abs(lo)); ++it) {
      double m = 0.5 * (lo + hi);
      (s2(m) < s ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
  }
  void retune_end(double end_slope) {
    // steepen the tail until s2' >= 1/end_slope where s2 reaches s_end
    long floor_j = long(slopes_.size());
    while (true) {
      double b = inverse_s2(s_end_);
      if (s2_d1(b) * end_slope >= 1) return;
      if (floor_j == 0) throw numeric_error("convex_majorant: could not flatten k at the window end");
      floor_j = std::max(0L, std::min(floor_j - 1, long(std::floor(b - b0_)) - 1));
      for (auto i = std::size_t(floor_j); i < slopes_.size(); ++i) slopes_[i] = std::max(slopes_[i], 1 / end_slope);
      for (std::size_t i = 0; i < slopes_.size(); ++i) knots_[i + 1] = knots_[i] + slopes_[i];
    }
  }
};

// Phi(x) = c e^{k(log |x|^2)} |x|^{rho(|x|)}, held constant inside the first radius of the window.
struct density_function {
  plane_field field;
  double c;
  double r_min, r_max;
  double worst_ratio;  // min over the grid of Laplacian / (gamma r^{rho(r)-2}) after scaling by c
  std::shared_ptr<convex_majorant> k;
};

namespace detail {
// radial Laplacian u_rr + u_r / r by central differences in log r: (1/r^2) d^2/dx^2
inline double radial_laplacian(const std::function<double(double)>& f, double r) {
  double h = 1e-3, x = std::log(r);
  double fp = f(std::exp(x + h)), f0 = f(r), fm = f(std::exp(x - h));
  return (fp - 2 * f0 + fm) / (h * h) / (r * r);
}
}  // namespace detail

inline density_function max_density_function(const std::function<double(double)>& gamma, const proximate_order& po, double r_min = std::exp(1.0),
                                             double r_max = 1e8, std::size_t n = 400, double margin = 1.1) {
  if (!(r_min > 1) || !(r_max > 10 * r_min)) throw input_error("max_density_function: bad window");
  auto rg = log_grid(r_min, r_max, n);
  std::vector<double> s, a;
  // a(s) = log gamma(e^{s/2}); sampled a bit past the window so k is defined on it
  for (double x : log_grid(r_min, r_max * 10, n + n / 4)) {
    double g = gamma(x);
    if (!(g > 0) || !std::isfinite(g)) throw input_error("max_density_function: gamma must be positive");
    s.push_back(2 * std::log(x));
    a.push_back(std::log(g));
  }
  auto k = std::make_shared<convex_majorant>(s, a);
  auto unit = [k, po](double r) { return std::exp((*k)(2 * std::log(r))) * po.V(r); };
  double c = 0;
  for (double r : rg) {
    double lap = detail::radial_laplacian(unit, r);
    double need = gamma(r) * po.V(r) / (r * r);
    if (!(lap > 0)) throw infeasible_error("max_density_function: Laplacian not positive at r=" + std::to_string(r));
    c = std::max(c, margin * need / lap);
  }
  // Phi must increase at r_min for the constant cap to stay subharmonic
  double h = 1e-4;
  if (!(unit(r_min * (1 + h)) > unit(r_min))) throw infeasible_error("max_density_function: Phi decreasing at r=" + std::to_string(r_min));
  double worst = pos_inf;
  for (double r : rg) worst = std::min(worst, c * detail::radial_laplacian(unit, r) / (gamma(r) * po.V(r) / (r * r)));
  double cap = c * unit(r_min);
  plane_field f{[=](cplx z) {
    double r = std::abs(z);
    return r <= r_min ? cap : c * unit(r);
  }};
  return {f, c, r_min, r_max, worst, k};
}

// v(x|t) = sum_j psi_j(t) (v_j)_{[t]}(x)
inline plane_field pseudo_trajectory(std::vector<plane_field> v, const partition_of_unity& P, double t, double rho) {
  if (v.size() != P.size()) throw input_error("pseudo_trajectory: one field per partition element");
  std::vector<std::pair<double, std::size_t>> w;
  for (std::size_t j : P.active(std::log(t))) w.push_back({P.psi(j, t), j});
  double scale = std::pow(t, -rho);
  return {[v = std::move(v), w, t, scale](cplx x) {
    double acc = 0;
    for (auto& [c, j] : w)
      if (c != 0) acc += c * v[j](x * t) * scale;
    return acc;
  }};
}

// R_eps v(x) = int alpha_eps(x - y) v(y) dy, polar Gauss quadrature over the eps-disc.
inline double mollify(const plane_field& v, cplx x, double eps) {
  if (eps <= 0) return v(x);
  static const auto& nodes = boost::math::quadrature::gauss<double, 10>::abscissa();
  static const auto& weights = boost::math::quadrature::gauss<double, 10>::weights();
  const int na = 16;
  double acc = 0, mass = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (int sgn : {-1, 1}) {
      double xi = nodes[i] * sgn;
      if (i == 0 && sgn == 1 && nodes[0] == 0) continue;
      double rr = 0.5 * (xi + 1);  // radius fraction in (0,1)
      double wr = 0.5 * weights[i] * bump(rr) * rr;
      double ring = 0;
      for (int a = 0; a < na; ++a) ring += v(x + std::polar(eps * rr, two_pi * (a + 0.5) / na));
      acc += wr * ring * two_pi / na;
      mass += wr * two_pi;
    }
  // discrete mass rather than the exact norm, so constants are reproduced to rounding
  return acc / mass;
}

// u(x) = sum_j psi_j(|x|) R_{eps_j}(v_j)(x) |x|^{rho(|x|)-rho} (+ Phi)
inline plane_field glue_asymptotic(std::vector<plane_field> v, const partition_of_unity& P, std::vector<double> eps, const proximate_order& po,
                                   std::optional<plane_field> phi = std::nullopt) {
  if (v.size() != P.size() || eps.size() != P.size()) throw input_error("glue_asymptotic: one field and one eps per partition element");
  return {[v = std::move(v), P, eps = std::move(eps), po, phi](cplx x) {
    double r = std::abs(x);
    double acc = 0;
    if (r > 0) {
      double corr = po.is_constant() ? 1.0 : po.V(r) / std::pow(r, po.rho);
      for (std::size_t j : P.active(std::log(r))) {
        double c = P.psi(j, r);
        if (c != 0) acc += c * mollify(v[j], x, eps[j]) * corr;
      }
    } else {
      acc = v[0](x);
    }
    return phi ? acc + (*phi)(x) : acc;
  }};
}

// eps_j = gamma_j^{1/4}
inline std::vector<double> mollifier_sequence(const partition_of_unity& P) {
  std::vector<double> e;
  for (std::size_t k = 0; k < P.size(); ++k) e.push_back(std::pow(std::min(P.gamma(k), 1.0), 0.25));
  return e;
}

struct laplacian_report {
  double worst;  // min over the grid of r^2 Lap u / r^rho, in units of the field scale
  cplx worst_at;
};

// Five point polar stencil u_rr + u_r/r + u_phiphi/r^2 with steps h r and h.
inline laplacian_report laplacian_check(const plane_field& u, double r_lo, double r_hi, std::size_t nr, std::size_t nphi, double rho, double h = 1e-3) {
  laplacian_report rep{pos_inf, 0};
  for (double r : log_grid(r_lo, r_hi, nr))
    for (std::size_t i = 0; i < nphi; ++i) {
      double phi = two_pi * double(i) / double(nphi);
      double x = std::log(r);
      auto f = [&](double xx, double pp) { return u(std::polar(std::exp(xx), pp)); };
      double c = f(x, phi);
      // (1/r^2) (u_xx + u_phiphi) with x = log r
      double lap = (f(x + h, phi) - 2 * c + f(x - h, phi)) / (h * h) + (f(x, phi + h) - 2 * c + f(x, phi - h)) / (h * h);
      double v = lap / std::pow(r, rho);
      if (v < rep.worst) rep = {v, std::polar(r, phi)};
    }
  return rep;
}

// Submean test: u(z) <= mean over the circle of radius rad around z.
inline double submean_pass_fraction(const plane_field& u, const std::vector<cplx>& pts, double rad, std::size_t n = 64) {
  std::size_t pass = 0;
  for (auto z : pts) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = u(z + std::polar(rad, two_pi * double(i) / double(n)));
    double m = pairwise_sum(v) / double(n), c = u(z);
    if (c == neg_inf || c <= m + 1e-12 * (std::abs(m) + 1)) ++pass;
  }
  return double(pass) / double(pts.size());
}

struct discretization {
  mass_distribution zeros;
  mass_distribution collected;  // mu with each cell's mass moved to its representative
  std::size_t cells = 0;
  double max_cell_defect = 0;  // max |mu(cell) - n(cell)|
  std::vector<double> R;       // annulus radii R_j
};

// Cells: disc |z| < R_1 as one cell, then annuli [R_j, R_{j+1}), R_{j+1} = R_j (j+1)^{4/kappa}, cut by
// circles in ratio (1+d)/(1-d) and rays k d, d = 1/(j+2). Cell masses are rounded to integers with
// a carried remainder in cell order; each cell mass sits at the geometric mid-radius and the
// mass-weighted mean angle of the cell.
inline discretization discretize_zeros(const mass_distribution& mu, double rho, double R1 = 1.0) {
  double kappa = std::min(rho - std::floor(rho), std::floor(rho) + 1 - rho);
  if (!(kappa > 1e-12)) throw input_error("discretize_zeros: integer rho is not supported");
  if (!(R1 > 0)) throw input_error("discretize_zeros: R_1 must be positive");
  discretization out;
  double rmax = mu.empty() ? R1 : mu.max_radius();
  std::vector<double> R{0.0, R1};
  for (std::size_t j = 1; R.back() <= rmax; ++j) {
    double next = R.back() * std::pow(double(j + 1), 4 / kappa);
    if (next <= R.back()) next = R.back() * 2;  // j = 0 factor is 1
    R.push_back(next);
  }
  out.R = R;
  struct cell_acc {
    double mass = 0, ang = 0, r_mid = 0, a0 = 0;
  };
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, cell_acc> cells;
  for (const auto& at : mu.atoms()) {
    double r = std::abs(at.z);
    auto j = std::size_t(std::upper_bound(R.begin(), R.end(), r) - R.begin()) - 1;
    std::tuple<std::size_t, std::size_t, std::size_t> key;
    cell_acc base;
    double phi = wrap_angle(std::arg(at.z));
    if (j == 0) {
      key = {0, 0, 0};
      base.r_mid = R1 / 2;
      base.a0 = 0;
    } else {
      double d = 1.0 / double(j + 2), q = std::log((1 + d) / (1 - d));
      auto nmax = std::size_t(std::floor(std::log(R[j + 1] / R[j]) / q));
      auto n = std::min(nmax, std::size_t(std::floor(std::log(r / R[j]) / q)));
      double lo = R[j] * std::exp(q * double(n)), hi = n == nmax ? R[j + 1] : lo * std::exp(q);
      auto k = std::size_t(std::floor(phi / d));
      key = {j, n, k};
      base.r_mid = std::sqrt(lo * hi);
      base.a0 = d * double(k);
    }
    auto [it, fresh] = cells.try_emplace(key, base);
    auto& c = it->second;
    double off = j == 0 ? std::remainder(phi, two_pi) : phi - c.a0;  // offset inside the cell
    c.mass += at.mass;
    c.ang += at.mass * off;
  }
  std::vector<atom> zeros, moved;
  double carry = 0;
  for (auto& [key, c] : cells) {
    double ang0 = c.a0 + (c.mass > 0 ? c.ang / c.mass : 0);
    if (c.mass > 0) moved.push_back({std::polar(c.r_mid, ang0), c.mass});
    double want = c.mass + carry;
    double n = std::floor(want + 1e-12);
    carry = want - n;
    out.max_cell_defect = std::max(out.max_cell_defect, std::abs(c.mass - n));
    if (n > 0) {
      zeros.push_back({std::polar(c.r_mid, ang0), n});
    }
  }
  out.cells = cells.size();
  out.zeros = mass_distribution(std::move(zeros));
  out.collected = mass_distribution(std::move(moved));
  return out;
}

// Total defect of the rounding in K_R: collected mass minus integer mass. Cells are rounded in
// order of radius with the remainder carried, so this stays in [0, 1).
inline double integer_defect(const discretization& d, double R) { return d.collected.count(R) - d.zeros.count(R); }

// Smooth radial-angular test bumps supported in 1/2 < |x| < 2.
inline double test_bump(int which, cplx x) {
  double r = std::abs(x), phi = std::arg(x);
  double rad = bump(std::log(r) / std::log(2.0));
  if (which == 0) return rad * (1 + 0.5 * std::cos(phi));
  return rad * bump(std::remainder(phi - 1.0, two_pi) / 1.5);
}

// <mu_t, g> = sum m g(z/t) / V(t)
inline double pair_measure(const mass_distribution& mu, const proximate_order& po, double t, int which) {
  auto [a, b] = mu.annulus(t / 2, 2 * t);
  std::vector<double> v;
  for (std::size_t i = a; i < b; ++i) v.push_back(mu.atoms()[i].mass * test_bump(which, mu.atoms()[i].z / t));
  return pairwise_sum(v) / po.V(t);
}

// sup over the two bumps of |<mu_t - n_t, g>|
inline double weak_residual(const mass_distribution& mu, const mass_distribution& n, const proximate_order& po, double t) {
  double r = 0;
  for (int w : {0, 1}) r = std::max(r, std::abs(pair_measure(mu, po, t, w) - pair_measure(n, po, t, w)));
  return r;
}

// <u_t, g> by polar Gauss quadrature on 1/2 < |x| < 2.
inline double pair_field(const plane_field& u, const proximate_order& po, double t, int which, std::size_t na = 64) {
  double Vt = po.V(t);
  auto radial = [&](double x) {
    double r = std::exp(x);
    std::vector<double> v(na);
    for (std::size_t i = 0; i < na; ++i) {
      cplx z = std::polar(r, two_pi * double(i) / double(na));
      v[i] = test_bump(which, z) * u(z * t) / Vt;
    }
    return pairwise_sum(v) * two_pi / double(na) * r * r;
  };
  return boost::math::quadrature::gauss<double, 30>::integrate(radial, -std::log(2.0), std::log(2.0));
}

// Lower-indicator family: W(z) = max(delta H(z,p), -lambda + K|z-1|) near 1, delta H(z,p) elsewhere;
// v_theta(z) = W(z e^{-i theta}, K, delta, M + 1 - g_n(theta)) + (M + 1)|z|^rho.
struct lower_indicator_family {
  double rho;
  int p;
  direction_function target, g_n;
  double K, delta, M;
  int level;

  double H(cplx z) const {
    if (z == cplx(1, 0)) return neg_inf;
    double v = std::log(std::abs(1.0 - z));
    cplx zk = 1;
    for (int k = 1; k <= p; ++k) {
      zk *= z;
      v += zk.real() / k;
    }
    return v;
  }
  double W(cplx z, double lambda) const {
    double base = delta * H(z);
    if (std::abs(z - 1.0) >= delta || !std::isfinite(lambda)) return base;
    return std::max(base, -lambda + K * std::abs(z - 1.0));
  }
  double member(double theta, cplx z) const { return at(theta, z * std::polar(1.0, -theta)); }
  // v_theta(tau e^{i phi}) with the rotation done on the angle: at phi = theta the trunk point
  // is hit exactly, while rounding in z e^{-i theta} would land 1e-16 away where delta log|z-1|
  // is still far above -lambda
  double member_polar(double theta, double tau, double phi) const { return at(theta, std::polar(tau, phi - theta)); }
  double at(double theta, cplx w) const {
    double gt = g_n.at(theta);
    double lambda = gt == neg_inf ? pos_inf : M + 1 - gt;
    return W(w, lambda) + (M + 1) * std::pow(std::abs(w), rho);
  }
  plane_field field(double theta) const {
    return {[this, theta](cplx z) { return member(theta, z); }};
  }
};

namespace detail {

// Fejer mean of order N of a sampled periodic function (direct DFT; n is small).
inline std::vector<double> fejer(const direction_function& g, std::size_t N) {
  std::size_t n = g.size();
  std::vector<double> a(N + 1), b(N + 1), out(n);
  for (std::size_t m = 0; m <= N; ++m) {
    std::vector<double> c(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = g[i] * std::cos(double(m) * g.phi(i));
      s[i] = g[i] * std::sin(double(m) * g.phi(i));
    }
    a[m] = 2 * pairwise_sum(c) / double(n);
    b[m] = 2 * pairwise_sum(s) / double(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double v = a[0] / 2;
    for (std::size_t m = 1; m <= N; ++m) v += (1 - double(m) / double(N + 1)) * (a[m] * std::cos(double(m) * g.phi(i)) + b[m] * std::sin(double(m) * g.phi(i)));
    out[i] = v;
  }
  return out;
}

}  // namespace detail

// g_n = Fejer mean of order 2^{n+1} of g + its deficit + 1/n, so g_n >= g + 1/n on the grid.
// -inf samples of g stay -inf in g_n (untruncated trunk in that direction).
inline lower_indicator_family make_lower_indicator_family(const direction_function& g, double rho, int n) {
  double kappa = std::min(rho - std::floor(rho), std::floor(rho) + 1 - rho);
  if (!(kappa > 1e-12)) throw input_error("lower_indicator_family: integer rho is not supported");
  if (n < 1) throw input_error("lower_indicator_family: level must be >= 1");
  std::vector<double> finite(g.size());
  double floor_v = pos_inf;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::isfinite(g[i])) floor_v = std::min(floor_v, g[i]);
  if (!std::isfinite(floor_v)) throw input_error("lower_indicator_family: g has no finite value");
  for (std::size_t i = 0; i < g.size(); ++i) finite[i] = std::isfinite(g[i]) ? g[i] : floor_v;
  direction_function gf(finite, rho);
  auto sm = detail::fejer(gf, std::size_t(2) << n);
  double deficit = 0;
  for (std::size_t i = 0; i < g.size(); ++i) deficit = std::max(deficit, finite[i] - sm[i]);
  for (std::size_t i = 0; i < g.size(); ++i) sm[i] = std::isfinite(g[i]) ? sm[i] + deficit + 1.0 / n : neg_inf;
  direction_function gn(sm, rho);
  double M = 0, dmax = 0, lam_max = 0;
  for (std::size_t i = 0; i < gn.size(); ++i) {
    if (!std::isfinite(gn[i])) continue;
    M = std::max(M, gn[i]);
    double nb = gn[i + 1];
    if (std::isfinite(nb)) dmax = std::max(dmax, std::abs(nb - gn[i]) / gn.step());
  }
  for (std::size_t i = 0; i < gn.size(); ++i)
    if (std::isfinite(gn[i])) lam_max = std::max(lam_max, M + 1 - gn[i]);
  int p = int(std::floor(rho));
  lower_indicator_family fam{rho, p, g, gn, 2 * dmax + 2 + 4 * rho * std::max(1.0, std::pow(1.5, rho - 1)) * lam_max, 0.0, M, n};
  // delta: start at 1/(2K) and halve until the trunk conditions hold on a check grid
  fam.delta = 0.5 / fam.K;
  for (int it = 0; it < 60; ++it, fam.delta /= 2) {
    if (fam.delta < 1e-12) break;
    bool ok = true;
    // delta H >= -1/4 on |z-1| = delta, and delta H |z|^{-rho} >= -1/4 for |z-1| >= delta
    for (int i = 0; i < 64 && ok; ++i) {
      cplx z = 1.0 + std::polar(fam.delta, two_pi * i / 64.0);
      if (fam.delta * fam.H(z) < -0.25) ok = false;
      for (double rr : {1.0, 1.5, 2.0, 4.0}) {
        cplx w = 1.0 + std::polar(rr * fam.delta, two_pi * i / 64.0);
        if (fam.delta * fam.H(w) * std::pow(std::abs(w), -rho) < -0.25) ok = false;
      }
    }
    for (double rr : log_grid(1e-3, 1e3, 61))
      for (int i = 0; i < 64 && ok; ++i) {
        cplx w = std::polar(rr, two_pi * i / 64.0);
        if (std::abs(w - 1.0) < fam.delta) continue;
        if (fam.delta * fam.H(w) * std::pow(rr, -rho) < -0.25) ok = false;
      }
    if (ok) return fam;
  }
  throw numeric_error("lower_indicator_family: delta underflow; refine the smoothing of g");
}

struct family_report {
  double pin_error;      // max |v_{phi}(e^{i phi}) - g_n(phi)|
  double min_excess;     // min over (theta, tau, phi) of v_theta(tau e^{i phi}) tau^{-rho} - g_n(phi)
  double bound;          // sup v |z|^{-rho} over the sample
  double submean;        // pass fraction of the submean test
};

// Checks pinning, the lower bound v |z|^{-rho} >= g_n(phi), the global bound and subharmonicity.
inline family_report check_family(const lower_indicator_family& f, std::size_t ntheta = 16, std::size_t nphi = 128) {
  family_report rep{0, pos_inf, neg_inf, 0};
  std::vector<cplx> pts;
  for (std::size_t i = 0; i < f.g_n.size(); i += f.g_n.size() / nphi) {
    double phi = f.g_n.phi(i);
    double gp = f.g_n[i];
    if (std::isfinite(gp)) rep.pin_error = std::max(rep.pin_error, std::abs(f.member_polar(phi, 1.0, phi) - gp));
  }
  for (std::size_t a = 0; a < ntheta; ++a) {
    double theta = two_pi * double(a) / double(ntheta);
    bool trunk = !std::isfinite(f.g_n.at(theta));
    for (double tau : log_grid(0.05, 20, 41))
      for (std::size_t i = 0; i < nphi; ++i) {
        double phi = two_pi * double(i) / double(nphi);
        double v = f.member_polar(theta, tau, phi) * std::pow(tau, -f.rho);
        double gp = f.g_n.at(phi);
        if (!trunk && std::isfinite(gp) && std::isfinite(v)) rep.min_excess = std::min(rep.min_excess, v - gp);
        rep.bound = std::max(rep.bound, v);
      }
    // submean points around the trunk and far away
    for (int i = 0; i < 8; ++i) {
      pts.push_back(std::polar(1.0, theta) * (1.0 + std::polar(0.5 * f.delta, two_pi * i / 8.0)));
      pts.push_back(std::polar(1.0 + 0.5 * i, theta + 0.3 * i));
    }
  }
  std::size_t pass = 0, total = 0;
  for (std::size_t a = 0; a < ntheta; ++a) {
    double theta = two_pi * double(a) / double(ntheta);
    std::vector<cplx> own(pts.begin() + std::ptrdiff_t(16 * a), pts.begin() + std::ptrdiff_t(16 * (a + 1)));
    double fr = submean_pass_fraction(f.field(theta), own, 0.25 * f.delta, 256);
    pass += std::size_t(std::lround(fr * double(own.size())));
    total += own.size();
  }
  rep.submean = double(pass) / double(total);
  return rep;
}

// Riesz mass of a smooth field sampled into atoms on a polar grid over r_lo <= |z| <= r_hi:
// density Lap u / (2 pi) times the cell area, placed at cell centres.
inline mass_distribution riesz_atoms(const plane_field& u, double r_lo, double r_hi, std::size_t nr, std::size_t nphi, double h = 1e-3) {
  std::vector<atom> out;
  double dx = std::log(r_hi / r_lo) / double(nr), dp = two_pi / double(nphi);
  for (std::size_t i = 0; i < nr; ++i) {
    double x = std::log(r_lo) + (double(i) + 0.5) * dx;
    for (std::size_t k = 0; k < nphi; ++k) {
      double phi = (double(k) + 0.5) * dp;
      auto f = [&](double xx, double pp) { return u(std::polar(std::exp(xx), pp)); };
      double c = f(x, phi);
      // Lap u dA = (u_xx + u_pp) dx dphi in log-polar coordinates
      double lap = (f(x + h, phi) - 2 * c + f(x - h, phi)) / (h * h) + (f(x, phi + h) - 2 * c + f(x, phi - h)) / (h * h);
      double m = std::max(0.0, lap) * dx * dp / two_pi;
      if (m > 0) out.push_back({std::polar(std::exp(x), phi), m});
    }
  }
  return mass_distribution(std::move(out));
}

}  // namespace subharm
