#pragma once

#include <array>
#include <functional>
#include <nlohmann/json.hpp>

#include "subharm/indicators.hpp"

namespace subharm {

// h(phi) = max Re(z e^{i phi}) over the body, i.e. x cos phi - y sin phi at the extreme point.
struct support_body {
  std::function<double(double)> eval;
  direction_function h;
  std::string label;

  double operator()(double phi) const { return eval(phi); }
};

inline support_body make_body(std::function<double(double)> f, std::string label, std::size_t n = 1024) {
  auto h = direction_function::sample(f, n, 1.0);
  return {std::move(f), std::move(h), std::move(label)};
}

inline double support_of_point(cplx z, double phi) { return z.real() * std::cos(phi) - z.imag() * std::sin(phi); }

inline support_body polygon_body(std::vector<cplx> vertices, std::size_t n = 1024) {
  if (vertices.empty()) throw input_error("support body: no vertices");
  for (auto& v : vertices)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw input_error("support body: non-finite vertex");
  return make_body(
      [vs = std::move(vertices)](double phi) {
        double m = neg_inf;
        for (auto& v : vs) m = std::max(m, support_of_point(v, phi));
        return m;
      },
      "polygon", n);
}

inline support_body disc_body(double r, cplx center = 0, std::size_t n = 1024) {
  if (!(r >= 0)) throw input_error("support body: negative radius");
  return make_body([=](double phi) { return support_of_point(center, phi) + r; }, "disc", n);
}

inline support_body segment_body(cplx a, cplx b, std::size_t n = 1024) {
  auto p = polygon_body({a, b}, n);
  p.label = "segment";
  return p;
}

// Support of c G1 + (1-c) G2.
inline support_body mix(const support_body& a, const support_body& b, double c) {
  if (c < 0 || c > 1) throw input_error("mix: c outside [0,1]");
  auto fa = a.eval, fb = b.eval;
  std::vector<double> v(a.h.size());
  bool same = a.h.size() == b.h.size();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * a.h[i] + (1 - c) * (same ? b.h[i] : b.h.at(a.h.phi(i)));
  return {[=](double phi) { return c * fa(phi) + (1 - c) * fb(phi); }, direction_function(std::move(v), 1.0), "mix"};
}

inline support_body translate(const support_body& b, cplx c) {
  auto f = b.eval;
  return make_body([=](double phi) { return f(phi) + support_of_point(c, phi); }, b.label, b.h.size());
}

inline support_body scaled(const support_body& b, double lambda) {
  auto f = b.eval;
  return make_body([=](double phi) { return lambda * f(phi); }, b.label, b.h.size());
}

inline support_body body_from_json(const nlohmann::json& j, std::size_t n = 1024) {
  auto pt = [](const nlohmann::json& p) {
    if (!p.is_array() || p.size() != 2) throw input_error("support body: point must be [x, y]");
    return cplx(p[0].get<double>(), p[1].get<double>());
  };
  try {
    if (j.contains("vertices")) {
      std::vector<cplx> v;
      for (auto& p : j.at("vertices")) v.push_back(pt(p));
      return polygon_body(std::move(v), n);
    }
    if (j.contains("disc")) return disc_body(j.at("disc").get<double>(), j.contains("center") ? pt(j.at("center")) : cplx(0), n);
    if (j.contains("segment")) return segment_body(pt(j.at("segment").at(0)), pt(j.at("segment").at(1)), n);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("support body: ") + e.what());
  }
  throw input_error("support body: expected vertices, disc or segment");
}

enum class enclosure_kind { not_enclosed, free, sliding, rigid };

inline const char* to_string(enclosure_kind k) {
  switch (k) {
    case enclosure_kind::not_enclosed: return "not_enclosed";
    case enclosure_kind::free: return "free";
    case enclosure_kind::sliding: return "sliding";
    default: return "rigid";
  }
}

struct enclosure_status {
  enclosure_kind kind;
  cplx translation;
  double value;   // v* = min_c max_phi (h1 + Re(c e^{i phi}) - hG)
  double margin;  // -v* when free, else 0
  double tol;
};

namespace detail {

// max over phi of d(phi): grid scan, then golden refinement of the largest local maxima.
inline double refined_max(const std::function<double(double)>& d, std::size_t n) {
  std::vector<double> v(n);
  double step = two_pi / double(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = d(step * double(i));
  std::vector<std::pair<double, std::size_t>> peaks;
  for (std::size_t i = 0; i < n; ++i)
    if (v[i] >= v[(i + n - 1) % n] && v[i] >= v[(i + 1) % n]) peaks.push_back({v[i], i});
  std::sort(peaks.rbegin(), peaks.rend());
  double best = peaks.empty() ? *std::max_element(v.begin(), v.end()) : peaks.front().first;
  for (std::size_t k = 0; k < std::min<std::size_t>(peaks.size(), 6); ++k) {
    double a = step * (double(peaks[k].second) - 1), b = a + 2 * step;
    best = std::max(best, d(golden_max(d, a, b, 1e-14)));
  }
  return best;
}

}  // namespace detail

// Convex minimax over the translation c by nested golden section; then probe the
// optimum in 16 directions to tell sliding from rigid.
inline enclosure_status enclosure_classify(const support_body& h1, const support_body& hG) {
  std::size_t n = std::max(h1.h.size(), hG.h.size());
  double tol = 1e-6 * hG.h.scale();
  auto f = [&](cplx c) {
    return detail::refined_max([&](double phi) { return h1(phi) + support_of_point(c, phi) - hG(phi); }, n);
  };
  double R = 2 * (h1.h.scale() + hG.h.scale()) + 1;
  double ctol = 1e-10;
  auto inner = [&](double x, double* yo = nullptr) {
    double y = golden_min([&](double y) { return f({x, y}); }, -R, R, ctol);
    if (yo) *yo = y;
    return f({x, y});
  };
  double x = golden_min([&](double x) { return inner(x); }, -R, R, ctol);
  double y = 0;
  double v = inner(x, &y);
  cplx c(x, y);
  if (!std::isfinite(v)) throw numeric_error("enclosure_classify: optimizer did not converge");
  if (v > tol) return {enclosure_kind::not_enclosed, c, v, 0.0, tol};
  if (v < -tol) return {enclosure_kind::free, c, v, -v, tol};
  double s = 10 * tol;
  for (int k = 0; k < 16; ++k) {
    cplx u = std::polar(1.0, two_pi * k / 16.0), w = u * cplx(0, 1);
    // allow a small sideways correction so slide directions between probes are caught
    double best = golden_min([&](double t) { return f(c + s * u + t * w); }, -s, s, 1e-6);
    if (f(c + s * u + best * w) <= tol) return {enclosure_kind::sliding, c, v, 0.0, tol};
  }
  return {enclosure_kind::rigid, c, v, 0.0, tol};
}

struct verdict {
  bool complete, maximal, extremely_overcomplete;
  std::vector<enclosure_status> bodies;
  std::vector<std::pair<double, enclosure_status>> mixes;
};

inline bool enclosed(enclosure_kind k) { return k != enclosure_kind::not_enclosed; }

// Regular sets: one body. Indicator sets: two bodies plus their mixes on c_grid.
inline verdict completeness_verdict(const std::vector<support_body>& bodies, const support_body& G, const std::vector<double>& c_grid = {}) {
  if (bodies.size() == 1) {
    auto s = enclosure_classify(bodies[0], G);
    return {s.kind != enclosure_kind::free, enclosed(s.kind) && s.kind != enclosure_kind::free, s.kind == enclosure_kind::rigid, {s}, {}};
  }
  if (bodies.size() != 2) throw input_error("completeness_verdict: expected one or two bodies");
  if (c_grid.size() < 11) throw input_error("completeness_verdict: c grid needs at least 11 points");
  for (double c : c_grid)
    if (c < 0 || c > 1) throw input_error("completeness_verdict: c outside [0,1]");
  auto s1 = enclosure_classify(bodies[0], G), s2 = enclosure_classify(bodies[1], G);
  verdict out;
  out.bodies = {s1, s2};
  bool both_free = s1.kind == enclosure_kind::free && s2.kind == enclosure_kind::free;
  out.complete = !both_free;
  out.maximal = enclosed(s1.kind) && enclosed(s2.kind) && !both_free;
  out.extremely_overcomplete = true;
  for (double c : c_grid) {
    auto s = enclosure_classify(mix(bodies[0], bodies[1], c), G);
    out.mixes.push_back({c, s});
    if (s.kind != enclosure_kind::rigid) out.extremely_overcomplete = false;
  }
  return out;
}

struct overcompleteness_report {
  bool extremely_overcomplete;
  double d;            // length of the longest interval where g > 0
  bool at_pi;          // d equals pi within one grid step
  bool tangency;
};

// g = |h1 - h2|; decided on the longest open interval of positivity.
inline overcompleteness_report overcompleteness_test(const direction_function& h1, const direction_function& h2) {
  std::size_t n = h1.size();
  double step = h1.step();
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::abs(h1[i] - h2.at(h1.phi(i)));
  double thr = 1e-9 * std::max(h1.scale(), h2.scale());
  std::size_t zero = n;
  for (std::size_t i = 0; i < n; ++i)
    if (g[i] <= thr) {
      zero = i;
      break;
    }
  if (zero == n) return {false, two_pi, false, false};
  // longest cyclic run starting after a zero sample
  std::size_t best_len = 0, best_start = 0, len = 0, start = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    std::size_t i = (zero + k) % n;
    if (g[i] > thr) {
      if (!len) start = i;
      ++len;
      if (len > best_len) best_len = len, best_start = start;
    } else {
      len = 0;
    }
  }
  if (!best_len) return {true, 0.0, false, false};
  double d = double(best_len + 1) * step;
  if (d < pi - step) return {true, d, false, false};
  if (d > pi + step) return {false, d, false, false};
  double gmax = 0;
  for (std::size_t k = 0; k < best_len; ++k) gmax = std::max(gmax, g[(best_start + k) % n]);
  double secant = gmax / (d / 2);
  double left = g[best_start] / step, right = g[(best_start + best_len - 1) % n] / step;
  bool tang = std::min(left, right) < 0.05 * secant;
  return {tang, d, true, tang};
}

struct spiral_result {
  double rho_min, residual, boundary;
};

// Smallest rho with a positive solution of R'' - 2 rho sin(a) R' + rho^2 R = 0 vanishing at
// 0 and 2 pi cos(a), tan a = 2 pi / P. Residual and boundary values are relative to max |R|.
inline spiral_result spiral_spectral_value(double P, std::size_t n = 4001) {
  if (!(P > 0)) throw input_error("spiral_spectral_value: P must be positive");
  double alpha = std::atan(two_pi / P);
  double rho = 0.5 * (1 + (two_pi / P) * (two_pi / P));
  double a = rho * std::sin(alpha), b = rho * std::cos(alpha), L = two_pi * std::cos(alpha);
  double scale = 0, res = 0;
  std::vector<double> r0(n), r1(n), r2(n);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = L * double(i) / double(n - 1);
    double e = std::exp(a * eta), s = std::sin(b * eta), c = std::cos(b * eta);
    r0[i] = e * s;
    r1[i] = e * (a * s + b * c);
    r2[i] = e * ((a * a - b * b) * s + 2 * a * b * c);
    scale = std::max(scale, std::abs(r0[i]));
  }
  for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(r2[i] - 2 * a * r1[i] + rho * rho * r0[i]));
  double k = std::max(1.0, rho * rho) * scale;
  double bnd = std::max(std::abs(r0.front()), std::abs(std::exp(a * L) * std::sin(b * L))) / scale;
  return {rho, res / k, bnd};
}

}  // namespace subharm
