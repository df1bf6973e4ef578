#pragma once

#include <fstream>
#include <optional>
#include <sstream>

#include "subharm/mass_distribution.hpp"
#include "subharm/smooth.hpp"

namespace subharm {

struct radial_series {
  std::vector<double> r, a;

  radial_series() = default;
  radial_series(std::vector<double> rr, std::vector<double> aa) : r(std::move(rr)), a(std::move(aa)) { validate(); }

  void validate() const {
    if (r.size() != a.size()) throw input_error("radial series: length mismatch");
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!(r[i] > 0) || !(a[i] >= 0)) throw input_error("radial series: need r > 0 and a >= 0");
      if (i && !(r[i] > r[i - 1])) throw input_error("radial series: r must increase strictly");
      if (i && a[i] < a[i - 1]) throw input_error("radial series: a must be nondecreasing");
    }
  }
  std::size_t size() const { return r.size(); }
};

template <class F>
radial_series sample_radial(F&& a, double lo, double hi, std::size_t n) {
  auto r = log_grid(lo, hi, n);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a(r[i]);
  return {r, v};
}

inline radial_series read_radial_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);
  std::string line;
  std::vector<double> r, a;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && line.find_first_of("ra") != std::string::npos && line.find_first_of("0123456789") == std::string::npos) {
      first = false;
      continue;
    }
    first = false;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x, y;
    if (!(ss >> x >> y)) throw input_error("radial series: bad row '" + line + "'");
    r.push_back(x);
    a.push_back(y);
  }
  return {r, a};
}

// rho(r) = rho + corr(log r).  corr == nullptr means a constant order.
struct proximate_order {
  double rho = 1.0;
  std::function<double(double)> corr;
  bool smooth = false;
  std::string label = "constant";

  proximate_order() = default;
  explicit proximate_order(double r) : rho(r), smooth(true) {}
  proximate_order(double r, std::function<double(double)> c, bool s, std::string l)
      : rho(r), corr(std::move(c)), smooth(s), label(std::move(l)) {}

  double correction_at(double x) const { return corr ? corr(x) : 0.0; }
  double order_at(double r) const { return rho + correction_at(std::log(r)); }
  double L(double r) const {
    double x = std::log(r);
    return std::exp(x * correction_at(x));
  }
  double V(double r) const {
    if (!corr) return std::pow(r, rho);
    double x = std::log(r);
    return std::exp(x * (rho + correction_at(x)));
  }
  bool is_constant() const { return !corr; }
};

// x corr'(x) by central differences; this is r log r rho'(r).
inline double po_drift(const proximate_order& po, double r) {
  double x = std::log(r), h = 1e-4 * std::max(1.0, x);
  return x * (po.correction_at(x + h) - po.correction_at(x - h)) / (2 * h);
}

// n(r) and N(r) = sum m_j log(r/|z_j|) over |z_j| <= r.
struct radial_count {
  double n = 0, N = 0;
};

inline radial_count radial_counts(const mass_distribution& mu, double r) {
  if (!(r > 0)) throw input_error("radial_counts: r must be positive");
  if (mu.has_origin_atom()) throw input_error("radial_counts: atom at the origin");
  auto [lo, hi] = mu.annulus(-1.0, r);
  std::vector<double> terms;
  terms.reserve(hi - lo);
  double n = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const auto& a = mu.atoms()[i];
    n += a.mass;
    terms.push_back(a.mass * std::log(r / std::abs(a.z)));
  }
  return {n, pairwise_sum(terms)};
}

enum class type_class { minimal, normal, maximal };

inline const char* to_string(type_class c) {
  switch (c) {
    case type_class::minimal: return "minimal";
    case type_class::normal: return "normal";
    default: return "maximal";
  }
}

struct growth_report {
  double order = 0;
  double order_slope = 0;  // least-squares d log a / d log r on the top decade
  double type_value = 0;  // +inf when window maxima diverge
  type_class type_kind = type_class::normal;
  double convergence_exponent = 0;
  int genus = 0;
  double window_lo = 0, window_hi = 0;
};

namespace detail {
// Max of f over samples with r in [lo, hi].
template <class F>
double window_max(const radial_series& s, double lo, double hi, F&& f) {
  double m = neg_inf;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.r[i] >= lo * (1 - 1e-12) && s.r[i] <= hi * (1 + 1e-12)) m = std::max(m, f(i));
  return m;
}
}  // namespace detail

// Window maxima grow by more than this factor per decade count as divergence.
inline constexpr double type_divergence_factor = 1.05;

inline growth_report growth_scalars(const radial_series& s, const proximate_order& po) {
  if (s.size() < 8) throw input_error("growth_scalars: fewer than 8 samples");
  double hi = s.r.back(), lo = hi / 10;
  if (s.r.front() > hi / 100 * (1 + 1e-12)) throw input_error("growth_scalars: series spans less than 2 decades");
  if (lo <= 1) throw input_error("growth_scalars: top decade must lie in r > 1");
  growth_report g;
  g.window_lo = lo;
  g.window_hi = hi;
  g.order = std::max(0.0, detail::window_max(s, lo, hi, [&](std::size_t i) {
    return s.a[i] > 0 ? std::log(s.a[i]) / std::log(s.r[i]) : neg_inf;
  }));
  {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, k = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.r[i] >= lo * (1 - 1e-12) && s.a[i] > 0) {
        double x = std::log(s.r[i]), y = std::log(s.a[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y; k += 1;
      }
    g.order_slope = k >= 2 ? std::max(0.0, (k * sxy - sx * sy) / (k * sxx - sx * sx)) : g.order;
  }
  auto ratio = [&](std::size_t i) { return s.a[i] / po.V(s.r[i]); };
  double top = detail::window_max(s, lo, hi, ratio);
  double prev = detail::window_max(s, lo / 10, lo, ratio);
  g.type_value = top;
  if (top > type_divergence_factor * prev && top > 0) {
    g.type_kind = type_class::maximal;
    g.type_value = pos_inf;
  } else if (top * type_divergence_factor < prev) {
    g.type_kind = type_class::minimal;
  }
  return g;
}

inline constexpr int genus_cap = 16;

namespace detail {
// Integral of n(t) t^{-q} over [lo, hi], exact for the step function n.
inline double counting_moment(const mass_distribution& mu, double lo, double hi, double q) {
  auto [a, b] = mu.annulus(-1.0, hi);
  std::vector<double> terms;
  terms.reserve(b - a);
  for (std::size_t i = a; i < b; ++i) {
    double s = std::max(std::abs(mu.atoms()[i].z), lo);
    terms.push_back(mu.atoms()[i].mass * (std::pow(s, 1 - q) - std::pow(hi, 1 - q)) / (q - 1));
  }
  return pairwise_sum(terms);
}
}  // namespace detail

// Decade contributions of the tail integral of n(t)/t^{p+2}; true when they settle.
inline bool tail_converges(const mass_distribution& mu, int p) {
  double r0 = mu.min_radius(), r1 = mu.max_radius();
  int decades = int(std::floor(std::log10(r1 / r0)));
  if (decades < 2) throw input_error("exponent_and_genus: atoms span less than 2 decades");
  std::vector<double> c;
  double top = r1;
  for (int d = decades; d >= 1; --d) {
    double hi = top * std::pow(10.0, -(d - 1)), lo = hi / 10;
    c.push_back(detail::counting_moment(mu, lo, hi, p + 2.0));
  }
  double total = std::accumulate(c.begin(), c.end(), 0.0);
  std::size_t k = c.size();
  if (total <= 0) return true;
  if (c[k - 1] < 0.01 * total) return true;
  // Short windows: two consecutive clear geometric decreases also count.
  return c[k - 1] <= 0.8 * c[k - 2] && (k < 3 || c[k - 2] <= 0.8 * c[k - 3]);
}

inline radial_series counting_series(const mass_distribution& mu, int per_decade = 16) {
  double r0 = mu.min_radius(), r1 = mu.max_radius();
  auto n = std::size_t(std::ceil(std::log10(r1 / r0) * per_decade)) + 1;
  return sample_radial([&](double r) { return mu.count(r); }, r0, r1, std::max<std::size_t>(n, 8));
}

struct exponent_genus {
  double rho_mu;
  int p;
};

inline exponent_genus exponent_and_genus(const mass_distribution& mu) {
  if (mu.empty()) throw input_error("exponent_and_genus: empty measure");
  if (mu.has_origin_atom()) throw input_error("exponent_and_genus: atom at the origin");
  auto g = growth_scalars(counting_series(mu), proximate_order(1.0));
  for (int p = 0; p <= genus_cap; ++p) {
    if (tail_converges(mu, p)) {
      const double slack = 0.15;
      if (p > g.order + slack || g.order > p + 1 + slack)
        throw numeric_error("exponent_and_genus: genus " + std::to_string(p) + " inconsistent with exponent " +
                            std::to_string(g.order));
      return {g.order, p};
    }
  }
  throw numeric_error("exponent_and_genus: genus overflow (tail diverges for all p <= 16)");
}

namespace detail {
// log(x)/x for x >= e, held at its maximum 1/e below, so the extension is C^1.
inline double loglog_shape(double x) { return x >= std::numbers::e ? std::log(x) / x : 1.0 / std::numbers::e; }

inline std::function<double(double)> piecewise_linear(std::vector<double> xs, std::vector<double> ys) {
  return [xs = std::move(xs), ys = std::move(ys)](double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t j = std::size_t(it - xs.begin());
    double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return ys[j - 1] + t * (ys[j] - ys[j - 1]);
  };
}
}  // namespace detail

inline proximate_order fit_proximate_order(const radial_series& s) {
  auto g = growth_scalars(s, proximate_order(1.0));
  if (!(g.order > 1e-6) || !std::isfinite(g.order)) throw numeric_error("fit_proximate_order: order is zero or infinite");
  double hi = s.r.back(), lo = hi / 100;
  std::vector<std::size_t> win;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.r[i] >= lo * (1 - 1e-12) && s.a[i] > 0) win.push_back(i);
  if (win.size() < 4) throw numeric_error("fit_proximate_order: too few positive samples");

  struct cand {
    double spread;
    proximate_order po;
  };
  std::optional<cand> best;
  for (int c : {0, 1, -1}) {
    std::vector<double> est;
    for (auto i : win) {
      double x = std::log(s.r[i]);
      est.push_back((std::log(s.a[i]) - c * detail::loglog_shape(x) * x) / x);
    }
    std::vector<double> top(est.end() - std::ptrdiff_t(win.size() / 2), est.end());
    std::nth_element(top.begin(), top.begin() + std::ptrdiff_t(top.size() / 2), top.end());
    double rho = top[top.size() / 2];
    if (rho - (c < 0 ? 1.0 / std::numbers::e : 0.0) <= 0) continue;
    proximate_order po = c == 0 ? proximate_order(rho)
                                : proximate_order(rho, [c](double x) { return c * detail::loglog_shape(x); }, true,
                                                  c > 0 ? "loglog+" : "loglog-");
    double mn = pos_inf, mx = neg_inf;
    for (auto i : win) {
      double q = std::log(s.a[i]) - std::log(po.V(s.r[i]));
      mn = std::min(mn, q);
      mx = std::max(mx, q);
    }
    if (!best || mx - mn < best->spread * 0.999) best = cand{mx - mn, po};
  }
  if (best && best->spread < std::log(2.0)) return best->po;

  // Fallback: interpolate log a / log r in x = log r.
  std::vector<double> xs, ys;
  for (auto i : win) {
    xs.push_back(std::log(s.r[i]));
    ys.push_back(std::log(s.a[i]) / xs.back());
  }
  double rho = ys.back();
  for (auto& y : ys) y -= rho;
  if (!(rho > 0)) throw numeric_error("fit_proximate_order: nonpositive order");
  return proximate_order(rho, detail::piecewise_linear(xs, ys), false, "interpolated");
}

// Smooth equivalent order agreeing with po at integer log-radii in [x_lo, x_hi].
inline proximate_order smooth_proximate_order(const proximate_order& po, double x_lo = 0.0, double x_hi = 60.0) {
  if (po.is_constant()) return po;
  int n0 = int(std::floor(x_lo)), n1 = int(std::ceil(x_hi));
  std::vector<double> knots;
  for (int n = n0; n <= n1; ++n) knots.push_back(po.correction_at(double(n)));
  auto f = [knots, n0, n1](double x) {
    if (x <= n0) return knots.front();
    if (x >= n1) return knots.back();
    int n = int(std::floor(x));
    std::size_t j = std::size_t(n - n0);
    return knots[j] + (knots[j + 1] - knots[j]) * smooth_step(x - n);
  };
  return proximate_order(po.rho, f, true, po.label + "/smoothed");
}

}  // namespace subharm
