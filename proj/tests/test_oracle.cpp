#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "biphoton/oracle.hpp"
#include "bench_configs.hpp"

using namespace biphoton;
using namespace biphoton::testing;

TEST(SlitPropagator, MagnitudeAtMostOne) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(-5e-3, 5e-3);
  const auto cfg = scheme2_nondegenerate();
  for (int k = 0; k < 2000; ++k) {
    const double x = pos(rng);
    ASSERT_LE(std::abs(slit_propagator(x, 1, 760e-9, cfg)), 1.0 + 1e-12);
    ASSERT_LE(std::abs(slit_propagator(x, 2, 840e-9, cfg, 16)), 1.0 + 1e-12);
  }
}

TEST(SlitPropagator, MirrorSymmetricOnAxis) {
  const auto cfg = scheme1_degenerate();
  EXPECT_NEAR(std::abs(slit_propagator(0.0, 1, 800e-9, cfg)),
              std::abs(slit_propagator(0.0, 2, 800e-9, cfg)), 1e-14);
  // The whole geometry is mirror symmetric: g1(-x) = g2(x).
  for (double x = -3e-3; x <= 3e-3; x += 0.37e-3) {
    const auto a = slit_propagator(-x, 1, 800e-9, cfg);
    const auto b = slit_propagator(x, 2, 800e-9, cfg);
    EXPECT_NEAR(std::abs(a - b), 0.0, 1e-12);
  }
}

TEST(SlitPropagator, RejectsCoarseQuadratureAndBadSlit) {
  const auto cfg = scheme1_degenerate();
  EXPECT_THROW(slit_propagator(0.0, 1, 800e-9, cfg, 15), std::invalid_argument);
  EXPECT_THROW(slit_propagator(0.0, 3, 800e-9, cfg), std::invalid_argument);
}

TEST(SlitPropagator, MatchesShiftedFraunhoferEnvelope) {
  // |g1|^2 vs sinc^2(pi b (x - d/2) / (lambda z)) at z = 0.547 m.
  const auto cfg = scheme1_degenerate();
  double worst = 0.0;
  for (int k = 0; k <= 600; ++k) {
    const double x = -3e-3 + k * 1e-5;
    const double u = std::numbers::pi * 100e-6 * (x - 200e-6) / (800e-9 * 0.547);
    const double ref = u == 0.0 ? 1.0 : std::pow(std::sin(u) / u, 2);
    const double g = std::norm(slit_propagator(x, 1, 800e-9, cfg));
    worst = std::max(worst, std::abs(g - ref) / ref);
  }
  EXPECT_LT(worst, 0.02);
}

TEST(OracleRate, OriginIsGlobalMaximumSchemeOne) {
  for (auto cfg : {scheme1_degenerate(), scheme1_nondegenerate()}) {
    const auto s = oracle_surface(cfg, 65);  // odd grid puts a node at the origin
    EXPECT_EQ(s.provenance, Provenance::Oracle);
    const double origin = s.at(32, 32);
    EXPECT_NEAR(origin, oracle_rate(0.0, 0.0, cfg), 1e-12);
    EXPECT_DOUBLE_EQ(s.max(), origin);
  }
}

TEST(OracleRate, AgreesWithAnalyticSchemeOneNondegenerate) {
  const auto cfg = scheme1_nondegenerate();
  const double dev = max_normalized_deviation(rate_surface(cfg, 96), oracle_surface(cfg, 96, 64));
  EXPECT_LT(dev, 0.02);
}

TEST(OracleRate, SchemeMirrorRelation) {
  const auto c1 = scheme1_nondegenerate();
  const auto c2 = with_scheme(c1, Scheme::SchemeII);
  double peak = oracle_rate(0.0, 0.0, c1);
  for (double x1 = -3e-3; x1 <= 3e-3; x1 += 0.29e-3)
    for (double x2 = -3e-3; x2 <= 3e-3; x2 += 0.31e-3)
      EXPECT_NEAR(oracle_rate(x1, x2, c2), oracle_rate(x1, -x2, c1), 0.02 * peak);
}

TEST(OracleRate, QuadratureDoublingConverges) {
  for (auto cfg : {scheme1_nondegenerate(), scheme2_nondegenerate()}) {
    const auto check = oracle_check(cfg, 48, 64);
    EXPECT_LT(check.quadrature_change, 1e-3);
  }
}

TEST(OracleRate, RejectsNonFinite) {
  EXPECT_THROW(oracle_rate(NAN, 0.0, scheme1_degenerate()), std::invalid_argument);
}
