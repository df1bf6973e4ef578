#include <gtest/gtest.h>

#include <random>

#include "subharm/indicators.hpp"
#include "subharm/potentials.hpp"

using namespace subharm;

namespace {

// Maximal 1-t.c. minorant through the conjugate body: intersect the half-planes
// x cos phi_k - y sin phi_k <= m_k and take the support function of the polygon.
std::optional<std::vector<double>> halfplane_oracle(const std::vector<double>& m) {
  std::size_t n = m.size();
  std::vector<cplx> verts;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      double pa = two_pi * double(a) / double(n), pb = two_pi * double(b) / double(n);
      double a11 = std::cos(pa), a12 = -std::sin(pa), a21 = std::cos(pb), a22 = -std::sin(pb);
      double det = a11 * a22 - a12 * a21;
      if (std::abs(det) < 1e-12) continue;
      double x = (m[a] * a22 - a12 * m[b]) / det, y = (a11 * m[b] - a21 * m[a]) / det;
      bool ok = true;
      for (std::size_t k = 0; k < n && ok; ++k) {
        double pk = two_pi * double(k) / double(n);
        ok = x * std::cos(pk) - y * std::sin(pk) <= m[k] + 1e-10;
      }
      if (ok) verts.emplace_back(x, y);
    }
  if (verts.empty()) return std::nullopt;
  std::vector<double> h(n, neg_inf);
  for (std::size_t k = 0; k < n; ++k) {
    double pk = two_pi * double(k) / double(n);
    for (auto v : verts) h[k] = std::max(h[k], v.real() * std::cos(pk) - v.imag() * std::sin(pk));
  }
  return h;
}

mass_distribution squares(std::size_t N) {
  std::vector<atom> v;
  for (std::size_t j = 1; j <= N; ++j) v.push_back({double(j) * double(j), 1.0});
  return mass_distribution(v);
}

}  // namespace

TEST(IndicatorPair, PowerField) {
  plane_field u{[](cplx z) { return 2.5 * std::pow(std::abs(z), 1.3); }};
  auto r = indicator_pair(u, proximate_order(1.3), decade_grid(1e4, 2, 32), 256);
  for (std::size_t i = 0; i < 256; ++i) {
    EXPECT_NEAR(r.h[i], 2.5, 1e-12);
    EXPECT_NEAR(r.h_lower[i], 2.5, 1e-12);
  }
}

TEST(IndicatorPair, HarmonicField) {
  plane_field u{[](cplx z) { return z.real(); }};
  auto r = indicator_pair(u, proximate_order(1.0), decade_grid(1e3, 2, 32), 256);
  for (std::size_t i = 0; i < 256; ++i) {
    EXPECT_NEAR(r.h[i], std::cos(r.h.phi(i)), 0.02);
    EXPECT_NEAR(r.h_lower[i], r.h[i], 1e-9);
  }
}

TEST(IndicatorPair, RayZerosAntiRayValue) {
  auto mu = squares(10000);
  auto r = indicator_pair(potential_field(mu, 0), proximate_order(0.5), decade_grid(1e4, 2, 32), 256);
  EXPECT_NEAR(r.h[128], pi, 0.05 * pi);
  EXPECT_NEAR(r.h[128], goldberg_indicator_bound(0.5, 0, 1.0, pi), 0.05 * pi);
  for (std::size_t i = 0; i < 256; ++i) EXPECT_GE(r.h[i], r.h_lower[i]);
}

TEST(IndicatorPair, DilationInvariance) {
  auto mu = squares(2000);
  auto u = potential_field(mu, 0);
  double t = 3.0;
  plane_field ut{[&](cplx z) { return u(t * z) / std::sqrt(t); }};
  auto g = decade_grid(3e3, 2, 32);
  auto a = indicator_pair(u, proximate_order(0.5), g, 256);
  std::vector<double> g2;
  for (double x : g) g2.push_back(x / t);
  auto b = indicator_pair(ut, proximate_order(0.5), g2, 256);
  for (std::size_t i = 0; i < 256; ++i) EXPECT_NEAR(a.h[i], b.h[i], 1e-9);
}

TEST(TrigConvexity, Examples) {
  EXPECT_TRUE(trig_convexity_check(direction_function(std::vector<double>(256, 0.7), 1.3)).pass);
  auto bad = trig_convexity_check(direction_function(std::vector<double>(256, -1.0), 1.0));
  EXPECT_FALSE(bad.pass);
  EXPECT_LT(bad.worst, 0.0);
  EXPECT_LT(bad.a, bad.c == 0 ? 256u : 1000u);
  auto fs = direction_function::sample([](double p) { return tilde_cos(0.5, p - pi); }, 256, 0.5);
  EXPECT_TRUE(trig_convexity_check(fs).pass);
}

TEST(TrigInterpolant, Examples) {
  EXPECT_EQ(trig_interpolant(0.1, 1.0, 0, 0, 1.5, 0.5), 0.0);
  double rho = 0.8, a = -0.5, b = 2.0;
  for (double phi = a; phi <= b; phi += 0.1)
    EXPECT_NEAR(trig_interpolant(a, b, std::cos(rho * a), std::cos(rho * b), rho, phi), std::cos(rho * phi), 1e-12);
  EXPECT_NEAR(trig_interpolant(0, pi / 2, 1, 0, 1, pi / 4), std::sqrt(0.5), 1e-15);
  EXPECT_EQ(trig_interpolant(0.2, 1.1, 3.0, 4.0, 1.0, 0.2), 3.0);
  EXPECT_EQ(trig_interpolant(0.2, 1.1, 3.0, 4.0, 1.0, 1.1), 4.0);
  EXPECT_THROW(trig_interpolant(0, 4, 1, 1, 1, 1), input_error);
}

TEST(TRhoMeasure, Examples) {
  auto c2 = direction_function::sample([](double p) { return std::cos(2 * p); }, 256, 2.0);
  auto s = t_rho_measure(c2);
  EXPECT_TRUE(s.atoms.empty());
  double dphi = two_pi / 256;
  for (double x : s.density) EXPECT_NEAR(x, 0.0, 4 * 4 * dphi * dphi);
  auto u = t_rho_measure(direction_function(std::vector<double>(256, 1.5), 0.7));
  EXPECT_TRUE(u.atoms.empty());
  for (double x : u.density) EXPECT_NEAR(x, 0.49 * 1.5, 1e-12);
  for (double rho : {0.3, 0.5, 0.8}) {
    auto f = t_rho_measure(direction_function::sample([&](double p) { return tilde_cos(rho, p - pi); }, 256, rho));
    ASSERT_EQ(f.atoms.size(), 1u);
    EXPECT_NEAR(f.atoms[0].first, 0.0, 1e-15);
    EXPECT_NEAR(f.atoms[0].second, 2 * rho * std::sin(pi * rho), 0.02 * 2 * rho * std::sin(pi * rho));
  }
}

TEST(ReconstructTcf, AtomAndUniform) {
  for (double rho : {0.3, 0.5, 0.8, 1.7}) {
    circle_measure s;
    s.atoms = {{0.0, 2 * rho * std::sin(pi * rho)}};
    auto h = reconstruct_tcf(s, rho);
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(h[i], tilde_cos(rho, h.phi(i) - pi), 1e-6);
  }
  for (double rho : {0.5, 1.0, 2.0, 2.5}) {
    circle_measure s;
    s.density.assign(256, rho * rho * 1.25);
    auto h = reconstruct_tcf(s, rho);
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(h[i], 1.25, 1e-6) << rho;
  }
}

TEST(ReconstructTcf, IntegerOrthogonalityRequired) {
  circle_measure s;
  s.atoms = {{0.3, 1.0}};
  EXPECT_THROW(reconstruct_tcf(s, 1.0), input_error);
  // Equal atoms at the fourth roots of unity: int e^{i phi} ds = 0.
  s.atoms = {{0.0, 1.0}, {pi / 2, 1.0}, {pi, 1.0}, {3 * pi / 2, 1.0}};
  auto h = reconstruct_tcf(s, 1.0);
  EXPECT_TRUE(trig_convexity_check(h, 1e-9).pass);
  auto back = t_rho_measure(h);
  EXPECT_EQ(back.atoms.size(), 4u);
  EXPECT_LT(tv_distance(back, s, 64), 0.02 * 4);
  // Atoms of T_1 h are edge lengths: a unit square up to translation, so the width is |cos| + |sin|.
  for (std::size_t i = 0; i < h.size() / 2; ++i)
    EXPECT_NEAR(h[i] + h[i + h.size() / 2], std::abs(std::cos(h.phi(i))) + std::abs(std::sin(h.phi(i))), 1e-9);
}

TEST(ReconstructTcf, RoundTrip) {
  std::mt19937 gen(1);
  std::uniform_real_distribution<double> U(0, 1);
  for (double rho : {0.4, 0.75, 1.5, 2.3}) {
    circle_measure s;
    for (int k = 0; k < 3; ++k) s.atoms.emplace_back(double(std::size_t(U(gen) * 256)) * two_pi / 256, 0.5 + U(gen));
    s.density.resize(256);
    for (std::size_t i = 0; i < 256; ++i) s.density[i] = 0.3 + 0.2 * std::sin(double(i) * two_pi / 256 * 3) + 0.1 * U(gen);
    auto h = reconstruct_tcf(s, rho);
    EXPECT_TRUE(trig_convexity_check(h).pass);
    auto back = t_rho_measure(h);
    EXPECT_LE(tv_distance(back, s, 64), 0.02 * s.total_variation()) << rho;
    auto h2 = reconstruct_tcf(back, rho);
    EXPECT_LT(sup_distance(h, h2), 1e-3 * h.scale());
  }
}

TEST(MaxTcMinorant, FixedPoints) {
  auto c = direction_function(std::vector<double>(256, 0.8), 1.0);
  auto mc = max_tc_minorant(c, 1.0);
  ASSERT_TRUE(mc);
  for (double x : mc->v) EXPECT_NEAR(x, 0.8, 1e-12);
  auto t = direction_function::sample([](double p) { return 1 + 0.5 * std::cos(p - 1) + 0.3 * std::abs(std::sin(p)); }, 256, 1.0);
  auto mt = max_tc_minorant(t, 1.0);
  ASSERT_TRUE(mt);
  EXPECT_LT(sup_distance(*mt, t), 1e-9);
  auto cap = direction_function::sample([](double p) { return 2.0 * std::max(std::cos(p), 0.0); }, 256, 1.0);
  auto mcap = max_tc_minorant(cap, 1.0);
  ASSERT_TRUE(mcap);
  EXPECT_LT(sup_distance(*mcap, cap), 1e-9);
}

TEST(MaxTcMinorant, NoMinorant) {
  auto m = direction_function(std::vector<double>(256, -1.0), 1.0);
  EXPECT_FALSE(max_tc_minorant(m, 1.0).has_value());
}

TEST(MaxTcMinorant, PropertiesAndOracle) {
  std::mt19937 gen(9);
  std::normal_distribution<double> N(0, 1);
  for (int trial = 0; trial < 4; ++trial) {
    double a[4], b[4];
    for (int k = 0; k < 4; ++k) {
      a[k] = N(gen) / (k + 1);
      b[k] = N(gen) / (k + 1);
    }
    auto f = [&](double p) {
      double v = 1.5;
      for (int k = 0; k < 4; ++k) v += 0.6 * (a[k] * std::cos((k + 1) * p) + b[k] * std::sin((k + 1) * p));
      return v;
    };
    for (double rho : {0.6, 1.0, 1.8}) {
      auto m = direction_function::sample(f, 256, rho);
      auto M = max_tc_minorant(m, rho);
      ASSERT_TRUE(M);
      for (std::size_t i = 0; i < 256; ++i) EXPECT_LE((*M)[i], m[i] + 1e-12);
      EXPECT_TRUE(trig_convexity_check(*M, 1e-9).pass);
      auto again = max_tc_minorant(*M, rho);
      EXPECT_LT(sup_distance(*again, *M), 1e-12);
    }
    std::vector<double> m64(64);
    for (int k = 0; k < 64; ++k) m64[k] = f(two_pi * k / 64);
    auto oracle = halfplane_oracle(m64);
    ASSERT_TRUE(oracle);
    auto M = max_tc_minorant(direction_function::sample(f, 256, 1.0), 1.0);
    double scale = 0;
    for (double x : m64) scale = std::max(scale, std::abs(x));
    for (int k = 0; k < 64; ++k) EXPECT_NEAR((*M)[4 * k], (*oracle)[k], 0.01 * scale);
  }
}

TEST(Minimality, Examples) {
  EXPECT_TRUE(minimality_test(direction_function::sample([](double p) { return std::cos(p); }, 256, 1.0)));
  EXPECT_TRUE(minimality_test(direction_function::sample([](double p) { return std::abs(std::sin(p)); }, 256, 1.0)));
  EXPECT_FALSE(minimality_test(direction_function(std::vector<double>(256, 1.0), 1.0)));
  EXPECT_THROW(minimality_test(direction_function(std::vector<double>(256, -1.0), 1.0)), input_error);
}
