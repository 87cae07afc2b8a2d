#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "lsreg/levelset.hpp"

using namespace lsreg;

TEST(Heaviside, SmoothValues)
{
  EXPECT_DOUBLE_EQ(heaviside_smooth(0.5, 0.1), 1.0);
  EXPECT_DOUBLE_EQ(heaviside_smooth(-0.05, 0.1), 0.5);
  EXPECT_DOUBLE_EQ(heaviside_smooth(-0.2, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(heaviside_smooth(0.0, 0.1), 1.0);
  EXPECT_DOUBLE_EQ(heaviside_smooth(-0.1, 0.1), 0.0);
  EXPECT_THROW(heaviside_smooth(0.0, 0.0), InvalidArgument);
  EXPECT_THROW(heaviside_smooth(0.0, -1.0), InvalidArgument);
}

TEST(Heaviside, DerivativeValues)
{
  EXPECT_DOUBLE_EQ(heaviside_smooth_deriv(-0.05, 0.1), 10.0);
  EXPECT_DOUBLE_EQ(heaviside_smooth_deriv(0.1, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(heaviside_smooth_deriv(-0.2, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(heaviside_smooth_deriv(0.0, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(heaviside_smooth_deriv(-0.1, 0.1), 0.0);
  EXPECT_THROW(heaviside_smooth_deriv(0.0, 0.0), InvalidArgument);
}

TEST(Heaviside, BoundedMonotoneAndSharpOutsideBand)
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> T(-2.0, 2.0), E(1e-3, 1.0);
  for (int k = 0; k < 2000; ++k) {
    double t = T(rng), s = T(rng), eps = E(rng);
    double h = heaviside_smooth(t, eps);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 1.0);
    if (t <= s) {
      EXPECT_LE(h, heaviside_smooth(s, eps));
    }
    if (t > 0.0 || t < -eps) {
      EXPECT_EQ(h, heaviside(t));
    }
  }
}

TEST(Heaviside, L1GapHalvesWithBand)
{
  Grid2D g = Grid2D::unit_square(128);
  auto phi = signed_distance_disk(g, 0.5, 0.5, 0.3);
  auto sharp = heaviside(phi);
  const double h = g.hx();
  double e8 = norm(heaviside_smooth(phi, 8 * h) - sharp, NormKind::L1);
  double e4 = norm(heaviside_smooth(phi, 4 * h) - sharp, NormKind::L1);
  double e2 = norm(heaviside_smooth(phi, 2 * h) - sharp, NormKind::L1);
  EXPECT_NEAR(e4 / e8, 0.5, 0.1);
  EXPECT_NEAR(e2 / e4, 0.5, 0.1);
  // Coarea: the gap is close to perimeter * eps / 2 for a unit-gradient phi.
  EXPECT_NEAR(e8, 2 * std::numbers::pi * 0.3 * 8 * h / 2, 0.2 * e8);
}

TEST(Projector, ConvexCombination)
{
  Grid2D g = Grid2D::unit_square(6);
  ScalarField psi = ScalarField::sample(g, [](double x, double y) { return 1 + x + y; });
  auto same = apply_q(ScalarField(g, 0.3), psi, psi);
  for (std::size_t k = 0; k < psi.size(); ++k)
    EXPECT_NEAR(same[k], psi[k], 1e-15 * psi[k]);
  ScalarField two(g, 2.0), zero(g, 0.0);
  EXPECT_EQ(apply_q(ScalarField(g, 1.0), two, zero), two);
  auto half = apply_q(ScalarField(g, 0.5), two, zero);
  for (std::size_t k = 0; k < half.size(); ++k)
    EXPECT_DOUBLE_EQ(half[k], 1.0);
  EXPECT_THROW(apply_q(ScalarField(g, 1.5), two, zero), InvalidArgument);
  EXPECT_THROW(apply_q(ScalarField(g, -1e-9), two, zero), InvalidArgument);
  EXPECT_NO_THROW(apply_q(ScalarField(g, 1.0 + 1e-13), two, zero));
}

TEST(Projector, StaysBetweenPhases)
{
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.0, 1.0), P(0.5, 3.5);
  Grid2D g = Grid2D::unit_square(10);
  for (int t = 0; t < 20; ++t) {
    ScalarField z(g), a(g), b(g);
    for (std::size_t k = 0; k < z.size(); ++k) {
      z[k] = U(rng);
      a[k] = P(rng);
      b[k] = P(rng);
    }
    auto u = apply_q(z, a, b);
    for (std::size_t k = 0; k < u.size(); ++k) {
      EXPECT_GE(u[k], std::min(a[k], b[k]) - 1e-15);
      EXPECT_LE(u[k], std::max(a[k], b[k]) + 1e-15);
    }
  }
}

TEST(Box, ClampAndValidation)
{
  EXPECT_THROW(AdmissibleBox(2.0, 2.0), InvalidArgument);
  AdmissibleBox box(1.0, 3.0);
  Grid2D g(4, 4);
  ScalarField inside(g, 2.0);
  EXPECT_EQ(clamp_to_box(inside, box), inside);
  auto high = clamp_to_box(ScalarField(g, 4.0), box);
  EXPECT_EQ(high.min(), 3.0);
  EXPECT_EQ(high.max(), 3.0);
  ScalarField mixed(g, 2.0);
  mixed(1, 1) = -5.0;
  mixed(2, 3) = 9.0;
  auto c = clamp_to_box(mixed, box);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double want = (i == 1 && j == 1) ? 1.0 : (i == 2 && j == 3) ? 3.0 : 2.0;
      EXPECT_EQ(c(i, j), want);
    }
}

namespace {

LevelSetState disk_state(const Grid2D& g)
{
  return {signed_distance_disk(g, 0.5, 0.5, 0.3), ScalarField(g, 2.0), ScalarField(g, 1.0),
          default_eps(g)};
}

} // namespace

TEST(Penalty, VanishesAtPriorWithFlatPhi)
{
  Grid2D g = Grid2D::unit_square(16);
  LevelSetState s{ScalarField(g, 0.7), ScalarField(g, 2.0), ScalarField(g, 1.0), 0.1};
  auto R = evaluate_R(s, s.phi, s.psi1, s.psi2, Betas{1, 1, 1}, 1e-3);
  EXPECT_EQ(R.total(), 0.0);
}

TEST(Penalty, LinearInBetas)
{
  Grid2D g = Grid2D::unit_square(24);
  auto s = disk_state(g);
  ScalarField phi0 = signed_distance_disk(g, 0.45, 0.5, 0.25);
  ScalarField p1(g, 1.5), p2(g, 1.2);
  auto a = evaluate_R(s, phi0, p1, p2, Betas{1, 1, 1}, 1e-3);
  auto b = evaluate_R(s, phi0, p1, p2, Betas{1, 2, 1}, 1e-3);
  EXPECT_EQ(b.phi_h1, 2 * a.phi_h1);
  EXPECT_EQ(b.shape_tv, a.shape_tv);
  EXPECT_EQ(b.levels_tv, a.levels_tv);
  EXPECT_THROW(evaluate_R(s, phi0, p1, p2, Betas{-1, 1, 1}, 1e-3), InvalidArgument);
}

TEST(Penalty, InvariantUnderCommonShift)
{
  Grid2D g = Grid2D::unit_square(24);
  auto s = disk_state(g);
  ScalarField phi0 = signed_distance_disk(g, 0.4, 0.6, 0.2);
  ScalarField p1(g, 1.5), p2(g, 1.2);
  auto a = evaluate_R(s, phi0, p1, p2, Betas{0, 1, 1}, 1e-3);
  auto shifted = s;
  shifted.phi += 0.37;
  auto b = evaluate_R(shifted, phi0 + ScalarField(g, 0.37), p1, p2, Betas{0, 1, 1}, 1e-3);
  EXPECT_NEAR(a.total(), b.total(), 1e-12 * a.total());
}

TEST(Penalty, ShapeTermRecoversPerimeter)
{
  Grid2D g = Grid2D::unit_square(128);
  auto s = disk_state(g);
  const double beta1 = 0.25;
  auto R = evaluate_R(s, s.phi, s.psi1, s.psi2, Betas{beta1, 1, 1}, 1e-6);
  double target = beta1 * 2 * std::numbers::pi * 0.3;
  EXPECT_NEAR(R.shape_tv, target, 0.1 * target);
}

TEST(State, DefaultBandIsTwoCells)
{
  Grid2D g(33, 17);
  EXPECT_DOUBLE_EQ(default_eps(g), 2.0 * g.hy());
}
