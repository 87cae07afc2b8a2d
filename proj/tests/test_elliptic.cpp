#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "lsreg/elliptic.hpp"

using namespace lsreg;
using std::numbers::pi;

namespace {

double rel_l2(const ScalarField& a, const ScalarField& b)
{
  return norm(a - b, NormKind::L2) / norm(b, NormKind::L2);
}

const SolverSettings tight{SolverMethod::ConjugateGradient, 1e-12, 20000};

// Relative error of a manufactured Dirichlet solve on an n x n grid.
double manufactured_error(int n, const std::function<double(double, double)>& coeff,
                          const std::function<double(double, double)>& rhs,
                          const std::function<double(double, double)>& exact)
{
  Grid2D g = Grid2D::unit_square(n);
  auto truth = ScalarField::sample(g, exact);
  auto w = solve_dirichlet(ScalarField::sample(g, coeff), ScalarField::sample(g, rhs),
                           boundary_trace(truth), tight);
  return rel_l2(w, truth);
}

} // namespace

TEST(Dirichlet, ConstantsAreHarmonic)
{
  Grid2D g = Grid2D::unit_square(17);
  auto w = solve_dirichlet(ScalarField(g, 1.0), ScalarField(g), BoundaryTrace(g, 2.5));
  for (std::size_t k = 0; k < w.size(); ++k)
    EXPECT_NEAR(w[k], 2.5, 1e-9);
}

TEST(Dirichlet, SineManufacturedSolution)
{
  auto coeff = [](double, double) { return 1.0; };
  auto rhs = [](double x, double y) { return 2 * pi * pi * std::sin(pi * x) * std::sin(pi * y); };
  auto exact = [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); };
  double e64 = manufactured_error(64, coeff, rhs, exact);
  double e128 = manufactured_error(128, coeff, rhs, exact);
  EXPECT_LT(e64, 1e-2);
  EXPECT_GE(e64 / e128, 2.5);
  EXPECT_LE(e64 / e128, 6.0);
}

TEST(Dirichlet, VariableCoefficientSecondOrder)
{
  auto coeff = [](double x, double) { return 1.0 + x; };
  auto exact = [](double x, double y) { return x * (1 - x) * y * (1 - y); };
  auto rhs = [](double x, double y) {
    double dxx = (1 - 2 * x) * y * (1 - y) - 2 * (1 + x) * y * (1 - y);
    double dyy = -2 * (1 + x) * x * (1 - x);
    return -(dxx + dyy);
  };
  double e32 = manufactured_error(32, coeff, rhs, exact);
  double e64 = manufactured_error(64, coeff, rhs, exact);
  double e128 = manufactured_error(128, coeff, rhs, exact);
  // Observed order from three grids with h roughly halving.
  double p1 = std::log(e32 / e64) / std::log(63.0 / 31.0);
  double p2 = std::log(e64 / e128) / std::log(127.0 / 63.0);
  EXPECT_GE(p1, 1.7);
  EXPECT_LE(p1, 2.3);
  EXPECT_GE(p2, 1.7);
  EXPECT_LE(p2, 2.3);
}

TEST(Dirichlet, LinearInDataJointly)
{
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-1, 1);
  Grid2D g = Grid2D::unit_square(20);
  ScalarField coeff = ScalarField::sample(g, [](double x, double y) { return 1 + x * y; });
  ScalarField r1(g), r2(g);
  BoundaryTrace g1(g), g2(g);
  for (std::size_t k = 0; k < r1.size(); ++k) {
    r1[k] = U(rng);
    r2[k] = U(rng);
  }
  for (std::size_t k = 0; k < g1.size(); ++k) {
    g1[k] = U(rng);
    g2[k] = U(rng);
  }
  auto lhs = solve_dirichlet(coeff, r1 * 2.0 + r2 * -3.0, g1 * 2.0 + g2 * -3.0, tight);
  auto rhs = solve_dirichlet(coeff, r1, g1, tight) * 2.0 + solve_dirichlet(coeff, r2, g2, tight) * -3.0;
  for (std::size_t k = 0; k < lhs.size(); ++k)
    EXPECT_NEAR(lhs[k], rhs[k], 1e-8);
}

TEST(Dirichlet, MatrixIsSymmetric)
{
  Grid2D g(13, 9);
  auto coeff = ScalarField::sample(g, [](double x, double y) { return x > 0.5 ? 3.0 : 1.0 + y; });
  EllipticSystem sys(coeff, BoundaryKind::Dirichlet, {});
  SparseMatrix A = sys.matrix();
  SparseMatrix At = A.transpose();
  SparseMatrix D = A - At;
  EXPECT_EQ(D.coeffs().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dirichlet, DirectAgreesWithCg)
{
  Grid2D g = Grid2D::unit_square(24);
  auto coeff = ScalarField::sample(g, [](double x, double y) { return 1 + std::hypot(x, y); });
  ScalarField rhs(g, 1.0);
  BoundaryTrace bc = boundary_trace(ScalarField::sample(g, [](double x, double) { return x; }));
  auto a = solve_dirichlet(coeff, rhs, bc, {SolverMethod::Direct, 1e-10, 100});
  auto b = solve_dirichlet(coeff, rhs, bc, tight);
  for (std::size_t k = 0; k < a.size(); ++k)
    EXPECT_NEAR(a[k], b[k], 1e-9);
}

TEST(Dirichlet, Errors)
{
  Grid2D g = Grid2D::unit_square(16);
  ScalarField bad(g, 1.0);
  bad(3, 3) = 0.0;
  EXPECT_THROW(solve_dirichlet(bad, ScalarField(g), BoundaryTrace(g)), InvalidArgument);
  SolverSettings starved{SolverMethod::ConjugateGradient, 1e-14, 1};
  EXPECT_THROW(solve_dirichlet(ScalarField(g, 1.0), ScalarField(g, 1.0), BoundaryTrace(g), starved),
               SolverError);
  EXPECT_THROW((SolverSettings{SolverMethod::ConjugateGradient, 1.5, 10}.validate()), InvalidArgument);
  EXPECT_THROW((SolverSettings{SolverMethod::ConjugateGradient, 0.0, 10}.validate()), InvalidArgument);
}

TEST(Neumann, ZeroFlux)
{
  Grid2D g = Grid2D::unit_square(12);
  auto v = solve_neumann(ScalarField(g, 1.0), BoundaryTrace(g));
  for (std::size_t k = 0; k < v.size(); ++k)
    EXPECT_NEAR(v[k], 0.0, 1e-12);
}

TEST(Neumann, RecoversAffineHarmonic)
{
  Grid2D g = Grid2D::unit_square(64);
  auto x = ScalarField::sample(g, [](double x, double) { return x; });
  auto v = solve_neumann(ScalarField(g, 1.0), normal_derivative(x), tight);
  auto expected = x + ScalarField(g, -mean(x));
  EXPECT_LT(rel_l2(v, expected), 0.02);
  EXPECT_NEAR(mean(v), 0.0, 1e-12);
}

TEST(Neumann, InvariantUnderFluxShift)
{
  Grid2D g = Grid2D::unit_square(20);
  auto coeff = ScalarField::sample(g, [](double x, double y) { return 1 + x + y * y; });
  auto flux = normal_derivative(ScalarField::sample(g, [](double x, double y) { return x * y; }));
  auto a = solve_neumann(coeff, flux, tight);
  auto b = solve_neumann(coeff, flux + BoundaryTrace(g, 0.75), tight);
  for (std::size_t k = 0; k < a.size(); ++k)
    EXPECT_NEAR(a[k], b[k], 1e-9);
}

TEST(Laplace, ExtensionsOfSimpleData)
{
  Grid2D g = Grid2D::unit_square(15);
  auto c = solve_laplace_dirichlet(BoundaryTrace(g, -1.25));
  for (std::size_t k = 0; k < c.size(); ++k)
    EXPECT_NEAR(c[k], -1.25, 1e-9);

  auto x = ScalarField::sample(g, [](double x, double) { return x; });
  auto h = solve_laplace_dirichlet(boundary_trace(x), tight);
  for (std::size_t k = 0; k < h.size(); ++k)
    EXPECT_NEAR(h[k], x[k], 1e-10);
}

TEST(Laplace, HarmonicOracleAndMaximumPrinciple)
{
  Grid2D g = Grid2D::unit_square(64);
  auto exact = ScalarField::sample(g, [](double x, double y) {
    return std::sin(pi * x) * std::sinh(pi * y) / std::sinh(pi);
  });
  auto bdata = boundary_trace(exact);
  auto h = solve_laplace_dirichlet(bdata, tight);
  EXPECT_LT(rel_l2(h, exact), 1e-2);
  double lo = *std::min_element(bdata.values().begin(), bdata.values().end());
  double hi = *std::max_element(bdata.values().begin(), bdata.values().end());
  EXPECT_GE(h.min(), lo - 1e-10);
  EXPECT_LE(h.max(), hi + 1e-10);
}

TEST(Laplace, MaximumPrincipleRandomData)
{
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(-2, 2);
  Grid2D g(18, 11);
  for (int t = 0; t < 5; ++t) {
    BoundaryTrace b(g);
    for (std::size_t k = 0; k < b.size(); ++k)
      b[k] = U(rng);
    auto h = solve_laplace_dirichlet(b, tight);
    double lo = *std::min_element(b.values().begin(), b.values().end());
    double hi = *std::max_element(b.values().begin(), b.values().end());
    EXPECT_GE(h.min(), lo - 1e-9);
    EXPECT_LE(h.max(), hi + 1e-9);
  }
}
