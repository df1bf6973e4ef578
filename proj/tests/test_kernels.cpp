#include <gtest/gtest.h>

#include <random>

#include "subharm/kernels.hpp"

using namespace subharm;

TEST(PrimaryKernel, Examples) {
  EXPECT_NEAR(primary_kernel({-1, 0}, 0).G, std::log(2.0), 1e-15);
  auto o = primary_kernel({0, 0}, 3);
  EXPECT_EQ(o.E, cplx(1.0, 0.0));
  EXPECT_EQ(o.G, 0.0);
  EXPECT_NEAR(primary_kernel({0.5, 0}, 1).G, std::log(0.5) + 0.5, 1e-15);
  auto one = primary_kernel({1, 0}, 2);
  EXPECT_EQ(one.G, neg_inf);
  EXPECT_EQ(one.E, cplx(0.0, 0.0));
}

TEST(PrimaryKernel, GIsLogModulusOfE) {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> d(-3, 3);
  for (int i = 0; i < 200; ++i) {
    cplx z(d(gen), d(gen));
    for (int p = 0; p <= 4; ++p) {
      auto v = primary_kernel(z, p);
      EXPECT_NEAR(v.G, std::log(std::abs(v.E)), 1e-9 * (1 + std::abs(v.G)));
    }
  }
}

TEST(PrimaryKernel, SeriesAgreesInsideUnitDisc) {
  for (int p = 0; p <= 4; ++p)
    for (double r = 0.05; r <= 0.9; r += 0.05)
      for (int k = 0; k < 32; ++k) {
        cplx z = std::polar(r, two_pi * k / 32);
        double s = 0;
        cplx zk = std::pow(z, p + 1);
        for (int j = p + 1; j < 2000; ++j, zk *= z) s -= (zk / double(j)).real();
        EXPECT_NEAR(primary_kernel_g(z, p), s, 1e-10);
      }
}

TEST(KernelEnvelope, SeriesBoundForGenusZero) {
  for (double r = 0.01; r <= 0.5; r += 0.01)
    for (int k = 0; k < 64; ++k) {
      cplx z = std::polar(r, two_pi * k / 64);
      EXPECT_LE(std::abs(primary_kernel_g(z, 0)), r / (1 - r) + 1e-15);
    }
}

// G_1(z) = -sum_{k>=2} z^k/k, so |G_1(z)|/z^2 = 1/2 + z/3 + z^2/4 + ...
// That sum crosses 0.60 near z = 0.245, so the [0.45, 0.60] band only holds below it.
TEST(KernelEnvelope, GenusOneRatioOnRealSegment) {
  for (double z = 0.01; z < 0.3; z += 0.01) {
    double q = std::abs(primary_kernel_g(z, 1)) / (z * z);
    double series = 0;
    for (int k = 2; k < 200; ++k) series += std::pow(z, k - 2) / k;
    EXPECT_NEAR(q, series, 1e-10);
    EXPECT_GE(q, 0.45);
    if (z < 0.24) EXPECT_LE(q, 0.60);
  }
  EXPECT_GT(std::abs(primary_kernel_g(0.29, 1)) / (0.29 * 0.29), 0.60);
}

TEST(KernelEnvelope, LeadingTermNearOrigin) {
  for (int p = 0; p <= 5; ++p)
    for (int k = 0; k < 16; ++k) {
      cplx z = std::polar(1e-3, two_pi * k / 16);
      EXPECT_LE(std::abs(primary_kernel_g(z, p)) / std::pow(1e-3, p + 1), 1.1 / (p + 1));
    }
}

TEST(KernelEnvelope, FittedConstantHoldsOnFinerGrid) {
  for (int p = 0; p <= 3; ++p) {
    auto c = kernel_envelope_check(p, 4.0, 32, 64, 0.05);
    EXPECT_TRUE(c.pass) << p << " A=" << c.A << " fine=" << c.worst_fine_ratio;
  }
}

TEST(CircleFourier, PrintedValues) {
  EXPECT_NEAR(std::abs(circle_fourier_gp(2, 0.5, 1)), 0.125, 1e-15);
  EXPECT_EQ(circle_fourier_gp(0, 2.0, 1), std::log(2.0));
  EXPECT_EQ(circle_fourier_gp(1, 2.0, 1), 1.5);
}

TEST(CircleFourier, MatchesQuadrature) {
  for (int p = 0; p <= 3; ++p)
    for (int m = 0; m <= 8; ++m)
      for (double r : {0.25, 0.5, 2.0, 4.0})
        EXPECT_NEAR(circle_fourier_gp(m, r, p), circle_fourier_gp_quadrature(m, r, p), 1e-8) << p << ' ' << m << ' ' << r;
}

TEST(TildeCos, Examples) {
  EXPECT_NEAR(tilde_cos(0.5, pi / 2), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(tilde_cos(0.5, 3 * pi), 0.0, 1e-15);
  EXPECT_NEAR(tilde_cos(0.5, -pi), 0.0, 1e-15);
  for (double phi = -10; phi < 10; phi += 0.37) EXPECT_NEAR(tilde_cos(2.0, phi), std::cos(2 * phi), 1e-12);
}

TEST(GreenDisc, Examples) {
  EXPECT_NEAR(green_disc(0.0, 0.5, 0.0, 1.0), std::log(0.5), 1e-15);
  EXPECT_NEAR(green_disc(std::polar(2.0, 0.3) + cplx(1, 1), cplx(1.5, 0.7), cplx(1, 1), 2.0), 0.0, 1e-10);
  EXPECT_EQ(green_disc(0.3, 0.3, 0.0, 1.0), neg_inf);
}

TEST(GreenDisc, SymmetricNegativeAndMonotoneInRadius) {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> d(-0.6, 0.6);
  cplx a(0.2, -0.1);
  for (int i = 0; i < 300; ++i) {
    cplx z = a + cplx(d(gen), d(gen)), w = a + cplx(d(gen), d(gen));
    double g = green_disc(z, w, a, 1.0);
    EXPECT_NEAR(g, green_disc(w, z, a, 1.0), 1e-12);
    EXPECT_LT(g, 0.0);
    EXPECT_LE(-g, -green_disc(z, w, a, 1.5) + 1e-14);
  }
}

TEST(PoissonDisc, Examples) {
  std::vector<double> one(128, 1.0), c1(256), c3(256);
  for (int k = 0; k < 256; ++k) {
    c1[k] = std::cos(two_pi * k / 256);
    c3[k] = std::cos(3 * two_pi * k / 256);
  }
  for (double r : {0.0, 0.3, 0.9})
    for (double phi : {0.0, 1.0, 2.5}) {
      cplx z = std::polar(r, phi);
      EXPECT_NEAR(poisson_disc(one, 0.0, 1.0, z), 1.0, 1e-12);
      EXPECT_NEAR(poisson_disc(c1, 0.0, 1.0, z), r * std::cos(phi), 1e-6);
    }
  for (double phi : {0.0, 0.7, 2.0}) EXPECT_NEAR(poisson_disc(c3, 0.0, 1.0, std::polar(0.5, phi)), 0.125 * std::cos(3 * phi), 1e-6);
  EXPECT_THROW(poisson_disc(one, 0.0, 1.0, 1.0), input_error);
}
