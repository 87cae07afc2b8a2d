#pragma once

// Forward maps of the two model problems and the adjoint machinery the
// iteration needs.
//
//   potential:     -div(sigma grad w) = u,  w = g;  F1(u) = dw/dn on the ring
//   conductivity:  -div(u grad w) = f,      w = g;  F2(u) = dw/dn on the ring
//                  (or w on the ring, which equals g, behind a flag)
//
// Inner products are the trapezoidal L2 products on the domain and on the
// ring, so an adjoint here satisfies <F'(u) du, r>_ring = <du, F'(u)* r>_dom.

#include <variant>

#include "lsreg/elliptic.hpp"
#include "lsreg/levelset.hpp"

namespace lsreg {

enum class AdjointMode {
  /// Exact transpose of the discrete linearised forward map.
  DiscreteAdjoint,
  /// The continuous recipe: harmonic extension for the potential problem,
  /// grad w . grad v with a Neumann solve for the conductivity problem.
  Continuous
};

struct PotentialProblem
{
  ScalarField sigma;
  BoundaryTrace g;
  SolverSettings settings;

  PotentialProblem(ScalarField sigma_, BoundaryTrace g_, SolverSettings settings_ = {})
    : sigma(std::move(sigma_)), g(std::move(g_)), settings(settings_),
      system_(std::make_shared<EllipticSystem>(sigma, BoundaryKind::Dirichlet, settings))
  {
    require(sigma.grid() == g.grid(), "sigma and g on different grids");
  }

  const Grid2D& grid() const { return sigma.grid(); }

  /// sigma is fixed, so the Dirichlet operator is assembled once.
  const EllipticSystem& system() const { return *system_; }

private:
  std::shared_ptr<const EllipticSystem> system_;
};

struct ConductivityProblem
{
  ScalarField f;
  BoundaryTrace g;
  AdmissibleBox box;
  SolverSettings settings;
  /// Measure w on the ring instead of dw/dn (identically g).
  bool literal_trace = false;

  ConductivityProblem(ScalarField f_, BoundaryTrace g_, AdmissibleBox box_,
                      SolverSettings settings_ = {}, bool literal = false)
    : f(std::move(f_)), g(std::move(g_)), box(box_), settings(settings_), literal_trace(literal)
  {
    require(box.m > 0.0, "conductivity box needs m > 0");
    require(f.grid() == g.grid(), "f and g on different grids");
  }

  const Grid2D& grid() const { return f.grid(); }
};

struct ForwardResult
{
  BoundaryTrace y;
  ScalarField w;
};

namespace detail {

inline void ensure_finite(const ScalarField& f, const char* what)
{
  if (!f.all_finite())
    throw SolverError(std::string(what) + " produced non-finite values");
}

/// Interior part of N^T W_ring r, where N is the measurement map.
inline Vector measurement_transpose(const EllipticSystem& sys, const BoundaryTrace& r,
                                    bool literal_trace)
{
  if (literal_trace)
    return Vector::Zero(sys.unknowns());
  auto w = boundary_weights(r.grid());
  BoundaryTrace weighted(r.grid());
  for (std::size_t k = 0; k < r.size(); ++k)
    weighted[k] = w[k] * r[k];
  return sys.restrict_interior(normal_derivative_transpose(weighted));
}

} // namespace detail

inline ForwardResult f1_forward(const ScalarField& u, const PotentialProblem& prob)
{
  require(u.grid() == prob.grid(), "source on a different grid");
  ScalarField w = prob.system().solve_dirichlet(u, prob.g);
  detail::ensure_finite(w, "potential forward solve");
  return {normal_derivative(w), std::move(w)};
}

/// F1'(u)* r. F1 is affine in u, so the result does not depend on u.
inline ScalarField f1_adjoint(const BoundaryTrace& r, const PotentialProblem& prob,
                              AdjointMode mode = AdjointMode::DiscreteAdjoint)
{
  require(r.grid() == prob.grid(), "residual on a different grid");
  const auto& g = prob.grid();
  if (mode == AdjointMode::Continuous)
    return solve_laplace_dirichlet(r, prob.settings);

  const auto& sys = prob.system();
  Vector x = sys.solve_interior(detail::measurement_transpose(sys, r, false));
  ScalarField out(g);
  sys.scatter_interior(x, out);
  auto weights = domain_weights(g);
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i)
      out(i, j) /= weights(i, j);
  return out;
}

inline ForwardResult f2_forward(const ScalarField& u, const ConductivityProblem& prob)
{
  require(u.grid() == prob.grid(), "coefficient on a different grid");
  constexpr double slack = 1e-12;
  if (!(u.min() >= prob.box.m - slack && u.max() <= prob.box.M + slack))
    throw InvalidArgument("conductivity outside the admissible box");
  ScalarField w = solve_dirichlet(u, prob.f, prob.g, prob.settings);
  detail::ensure_finite(w, "conductivity forward solve");
  BoundaryTrace y = prob.literal_trace ? boundary_trace(w) : normal_derivative(w);
  return {std::move(y), std::move(w)};
}

/// Gradient of 1/2 ||F2(u) - y||^2 with respect to u, given the forward
/// field w and residual r = F2(u) - y.
///
/// DiscreteAdjoint: solves A(u) lambda = N^T W r on the interior and returns
///   -(1/W_k) sum_{faces f at k} dc_f/du_k (lambda_a - lambda_b)(w_a - w_b) geo_f,
/// the face-wise form of grad w . grad lambda.
/// Continuous: v = solve_neumann(u, r) and the nodal product grad w . grad v.
inline ScalarField f2_adjoint_gradient(const ScalarField& u, const ScalarField& w,
                                       const BoundaryTrace& r, const ConductivityProblem& prob,
                                       AdjointMode mode = AdjointMode::DiscreteAdjoint)
{
  require(u.grid() == prob.grid() && w.grid() == prob.grid() && r.grid() == prob.grid(),
          "inputs on different grids");
  const auto& g = prob.grid();
  if (mode == AdjointMode::Continuous) {
    ScalarField v = solve_neumann(u, r, prob.settings);
    auto gw = gradient(w);
    auto gv = gradient(v);
    return hadamard(gw.x, gv.x) + hadamard(gw.y, gv.y);
  }

  EllipticSystem sys(u, BoundaryKind::Dirichlet, prob.settings);
  ScalarField lambda(g);
  sys.scatter_interior(sys.solve_interior(detail::measurement_transpose(sys, r, prob.literal_trace)),
                       lambda);
  // The interior rows are the stiffness rows divided by the cell area.
  const double area = g.hx() * g.hy();
  ScalarField grad(g);
  for_each_face(g, [&](std::size_t a, std::size_t b, double geo) {
    double prod = (lambda[a] - lambda[b]) * (w[a] - w[b]) * geo / area;
    grad[a] -= face_coefficient_da(u[a], u[b]) * prod;
    grad[b] -= face_coefficient_da(u[b], u[a]) * prod;
  });
  auto weights = domain_weights(g);
  for (std::size_t k = 0; k < grad.size(); ++k)
    grad[k] /= weights[k];
  detail::ensure_finite(grad, "conductivity adjoint");
  return grad;
}

// ---------------------------------------------------------------------------
// Uniform dispatch used by the inversion loop.

using Problem = std::variant<PotentialProblem, ConductivityProblem>;

inline const Grid2D& problem_grid(const Problem& p)
{
  return std::visit([](const auto& q) -> const Grid2D& { return q.grid(); }, p);
}

inline ForwardResult forward(const Problem& p, const ScalarField& u)
{
  if (auto* pot = std::get_if<PotentialProblem>(&p))
    return f1_forward(u, *pot);
  return f2_forward(u, std::get<ConductivityProblem>(p));
}

/// F'(u)* r for either problem.
inline ScalarField adjoint(const Problem& p, const ScalarField& u, const ForwardResult& fwd,
                           const BoundaryTrace& r, AdjointMode mode)
{
  if (auto* pot = std::get_if<PotentialProblem>(&p))
    return f1_adjoint(r, *pot, mode);
  return f2_adjoint_gradient(u, fwd.w, r, std::get<ConductivityProblem>(p), mode);
}

} // namespace lsreg
