#include <gtest/gtest.h>

#include <map>
#include <random>

#include "subharm/limits.hpp"

using namespace subharm;

namespace {

mass_distribution ray(double rho, std::size_t N, double angle = 0.0) {
  std::vector<atom> v;
  for (std::size_t j = 1; j <= N; ++j) v.push_back({std::polar(std::pow(double(j), 1.0 / rho), angle), 1.0});
  return mass_distribution(v);
}

}  // namespace

TEST(ScaleTransforms, IdentityAndFormula) {
  mass_distribution mu({{{3, 4}, 2.0}, {{-1, 0.5}, 1.0}});
  auto id = scale_transform(mu, proximate_order(0.7), 1.0, 0.3);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    EXPECT_EQ(id.atoms()[i].z, mu.atoms()[i].z);
    EXPECT_EQ(id.atoms()[i].mass, mu.atoms()[i].mass);
  }
  double t0 = 7.5;
  auto m = scale_transform(mass_distribution({{{2 * t0, 0}, 1.0}}), proximate_order(1.0), t0, 0.0);
  EXPECT_NEAR(m.atoms()[0].z.real(), 2.0, 1e-15);
  EXPECT_NEAR(m.atoms()[0].mass, 1.0 / t0, 1e-15);
  plane_field u{[](cplx z) { return z.real() + std::abs(z); }};
  auto ut = scale_transform(u, proximate_order(1.0), 1.0, 0.2);
  EXPECT_EQ(ut(cplx(0.3, 0.4)), u(cplx(0.3, 0.4)));
}

TEST(ScaleTransforms, CompositionUpToProximateOrderFactor) {
  proximate_order po(1.5, [](double x) { return x > std::numbers::e ? std::log(x) / x : 1 / std::numbers::e; }, true, "ll");
  plane_field u{[](cplx z) { return std::pow(std::abs(z), 1.5) * (1 + 0.3 * std::cos(std::arg(z))); }};
  for (double t : {1e3, 1e5, 1e8}) {
    double tau = 3.0;
    auto a = scale_transform(scale_transform(u, po, t), proximate_order(1.5), tau);
    auto b = scale_transform(u, po, t * tau);
    double factor = po.V(t * tau) / (po.V(t) * std::pow(tau, 1.5));
    cplx z(0.4, 0.7);
    EXPECT_NEAR(a(z) / b(z), factor, 1e-12 * factor);
    EXPECT_NEAR(factor, 1.0, 0.25);
  }
  double f1 = po.V(1e4 * 3) / (po.V(1e4) * std::pow(3.0, 1.5)), f2 = po.V(1e12 * 3) / (po.V(1e12) * std::pow(3.0, 1.5));
  EXPECT_LT(std::abs(f2 - 1), std::abs(f1 - 1));
}

TEST(SectorDensity, RayCountsAndComplement) {
  auto mu = ray(0.8, 20000);
  auto g = decade_grid(1e5, 2, 32);
  auto d = sector_density(mu, proximate_order(0.8), -0.1, 0.1, g);
  EXPECT_NEAR(d.upper, 1.0, 0.05);
  EXPECT_NEAR(d.lower, 1.0, 0.05);
  EXPECT_TRUE(d.exists);
  auto e = sector_density(mu, proximate_order(0.8), 0.5, 3.0, g);
  EXPECT_EQ(e.upper, 0.0);
}

TEST(SectorDensity, AlternatingDecadesHaveNoDensity) {
  // Mass r^rho grows only inside even decades: counting function has plateaus.
  std::vector<atom> v;
  double rho = 1.0;
  for (int d = 0; d < 6; d += 2)
    for (double r = std::pow(10.0, d); r < std::pow(10.0, d + 1); r *= 1.01) v.push_back({r, std::pow(r * 1.01, rho) - std::pow(r, rho)});
  mass_distribution mu(v);
  auto dd = sector_density(mu, proximate_order(rho), -0.5, 0.5, log_grid(1e3, 1e6, 97));
  EXPECT_GT(dd.upper, 2 * dd.lower);
  EXPECT_FALSE(dd.exists);
}

TEST(SectorDensity, ConeScaling) {
  auto mu = ray(0.8, 20000, 1.0);
  auto g = decade_grid(2e4, 2, 32);
  proximate_order po(0.8);
  for (double t : {2.0, 4.0}) {
    // Mass of the dilated cone at radius t s equals mass of the original cone at radius s scaled by t^rho.
    auto base = sector_density(mu, po, 0.9, 1.1, g);
    std::vector<double> gt;
    for (double x : g) gt.push_back(x * t);
    auto dil = sector_density(mu, po, 0.9, 1.1, gt);
    EXPECT_NEAR(dil.upper, base.upper, 0.05 * base.upper);
  }
}

TEST(CRG, HarmonicAndRayZeros) {
  plane_field re{[](cplx z) { return z.real(); }};
  EXPECT_TRUE(crg_test(re, proximate_order(1.0), decade_grid(1e3, 2, 32), 256, 1e-6).regular);
  mass_distribution mu = ray(0.5, 3000);
  auto r = crg_test(potential_field(mu, 0), proximate_order(0.5), decade_grid(1e4, 2, 32), 256, 0.05);
  EXPECT_TRUE(r.regular) << r.gap;
}

TEST(PeriodicExtension, FormulaAndExactInvariance) {
  auto P = periodic_extension(mass_distribution({{{2, 0}, 1.0}}), 4.0, 1.0, -3, 3);
  ASSERT_EQ(P.size(), 7u);
  for (int k = -3; k <= 3; ++k) {
    EXPECT_EQ(P.atoms()[std::size_t(k + 3)].z, cplx(2 * std::pow(4.0, k), 0));
    EXPECT_EQ(P.atoms()[std::size_t(k + 3)].mass, std::pow(4.0, k));
  }
  std::mt19937 gen(2);
  std::uniform_real_distribution<double> r(1, 4), a(0, two_pi);
  std::vector<atom> star;
  for (int i = 0; i < 6; ++i) star.push_back({std::polar(r(gen), a(gen)), 1.0 + i});
  for (double rho : {0.5, 1.0}) {
    auto muP = periodic_extension(mass_distribution(star), 4.0, rho, -5, 5);
    auto moved = scale_transform(muP, proximate_order(rho), 4.0, 0.0);
    std::map<std::pair<double, double>, double> orig;
    for (auto& x : muP.atoms()) orig[{x.z.real(), x.z.imag()}] = x.mass;
    std::size_t matched = 0;
    for (auto& x : moved.atoms()) {
      auto it = orig.find({x.z.real(), x.z.imag()});
      if (std::abs(x.z) < std::pow(4.0, -5)) continue;  // below the overlap window
      ASSERT_NE(it, orig.end());
      EXPECT_EQ(it->second, x.mass);
      ++matched;
    }
    EXPECT_EQ(matched, 10 * star.size());
  }
  EXPECT_THROW(periodic_extension(mass_distribution({{{5, 0}, 1.0}}), 4.0, 1.0, 0, 1), input_error);
}

TEST(PeriodicExtension, BoundedDensity) {
  auto muP = periodic_extension(mass_distribution({{{1.5, 0.5}, 1.0}, {{-2, 0}, 2.0}}), 3.0, 0.7, -10, 12);
  double lo = pos_inf, hi = 0;
  for (double r : log_grid(1.0, 1e5, 200)) {
    double q = muP.count(r) / std::pow(r, 0.7);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi / lo, 10.0);
}

TEST(PeriodicExtension, AsymmetricStarIsNotRegular) {
  auto muP = periodic_extension(mass_distribution({{{1.2, 0.3}, 1.0}, {std::polar(2.5, 2.0), 1.5}}), 5.0, 0.5, -30, 30);
  auto r = crg_test(potential_field(muP, 0), proximate_order(0.5), decade_grid(1e3, 2, 32), 256, 0.05);
  EXPECT_FALSE(r.regular);
}

TEST(ChainRecurrence, Scenarios) {
  auto d0 = [](std::size_t i, std::size_t j) { return i == j ? 0.0 : 1.0; };
  EXPECT_TRUE(chain_recurrence_test(1, d0, [](std::size_t, int) { return std::size_t(0); }, 0.1, 1, 5).recurrent);
  auto att = chain_recurrence_test(2, [](std::size_t i, std::size_t j) { return i == j ? 0.0 : 10.0; },
                                   [](std::size_t, int) { return std::size_t(1); }, 0.1, 1, 5);
  EXPECT_FALSE(att.recurrent);
  EXPECT_FALSE(att.chain[1][0]);
  EXPECT_TRUE(att.chain[0][1]);
  // Rotation orbit of length L on the circle.
  std::size_t L = 12;
  auto dc = [L](std::size_t i, std::size_t j) {
    double a = two_pi * double(i) / double(L), b = two_pi * double(j) / double(L);
    return std::abs(std::polar(1.0, a) - std::polar(1.0, b));
  };
  auto rot = [L](std::size_t i, int t) { return (i + std::size_t(t)) % L; };
  EXPECT_TRUE(chain_recurrence_test(L, dc, rot, 0.6, 1, 20).recurrent);
  // Disjoint union of two recurrent orbits far apart.
  auto du = [&](std::size_t i, std::size_t j) {
    if ((i < L) != (j < L)) return 100.0;
    return dc(i % L, j % L);
  };
  auto fu = [&](std::size_t i, int t) { return (i < L ? 0 : L) + (i % L + std::size_t(t)) % L; };
  auto two = chain_recurrence_test(2 * L, du, fu, 0.6, 1, 20);
  EXPECT_FALSE(two.recurrent);
  EXPECT_TRUE(two.chain[0][L - 1]);
  EXPECT_FALSE(two.chain[0][L]);
}

TEST(Ghat, WindowStabilityAndSymmetry) {
  double L = ghat_window(0.5, 0);
  cplx a = ghat_quadrature(0, pi, 0.5, 0, L), b = ghat_quadrature(0, pi, 0.5, 0, 1.5 * L);
  EXPECT_LT(std::abs(a - b), 1e-6);
  EXPECT_LT(std::abs(a.imag()), 1e-9);
  for (double s : {0.5, 2.0, 7.0}) {
    auto p = ghat_transform(s, 1.0, 0.5, 0).value, m = ghat_transform(-s, 1.0, 0.5, 0).value;
    EXPECT_NEAR(p.real(), m.real(), 1e-9);
    EXPECT_NEAR(p.imag(), -m.imag(), 1e-9);
  }
  double prev = pos_inf;
  for (double s = 0; s <= 20; s += 4) {
    double env = 0;
    for (double ds = 0; ds < 4; ds += 0.25) env = std::max(env, std::abs(ghat_transform(s + ds, 1.0, 0.5, 0).value));
    EXPECT_LT(env, prev);
    prev = env;
  }
  EXPECT_THROW(ghat_transform(0, 0, 1.0, 1), input_error);
}

TEST(Ghat, ClosedFormAtAntiRay) {
  // At gamma = pi, s = 0 the integrand is log(1 + e^t) e^{-t/2}: integral pi / sin(pi/2) / (1/2) = 2 pi.
  auto g = ghat_transform(0, pi, 0.5, 0);
  EXPECT_NEAR(g.value.real(), 2 * pi, 1e-6);
  EXPECT_NEAR(g.closed_form.real(), 2 * pi, 1e-12);
}

TEST(RayRegularity, Examples) {
  EXPECT_TRUE(ray_regularity_condition({0.3}, {0.3}, 0.5, 0));
  EXPECT_FALSE(ray_regularity_condition({0.0}, {pi}, 0.75, 0));
  EXPECT_FALSE(ray_regularity_condition({0.0, 1.0}, {0.0}, 0.5, 0));
  EXPECT_TRUE(ray_regularity_condition({0.0, 2.0}, {0.0, 2.0}, 0.5, 0, {0.0, 1.0, 5.0}));
}
