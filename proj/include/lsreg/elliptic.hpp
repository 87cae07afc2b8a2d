#pragma once

// Flux-form 5-point discretisation of -div(c grad w) on the node grid with
// harmonic-mean face coefficients, and the Dirichlet / pure-Neumann solves
// built on it.

#include <memory>
#include <string>
#include <variant>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "lsreg/grid.hpp"

namespace lsreg {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

enum class SolverMethod { ConjugateGradient, Direct };

struct SolverSettings
{
  SolverMethod method = SolverMethod::ConjugateGradient;
  double rel_tol = 1e-10;
  int max_iters = 20000;

  void validate() const
  {
    require(rel_tol > 0.0 && rel_tol < 1.0, "solver.rel_tol must lie in (0, 1)");
    require(max_iters > 0, "solver.max_iters must be positive");
  }
};

/// Solver for one symmetric positive definite matrix. The factorisation (or
/// preconditioner) is built once; copies share it.
class SpdSolver
{
public:
  SpdSolver(SparseMatrix matrix, const SolverSettings& settings)
    : settings_(settings)
  {
    settings.validate();
    if (settings.method == SolverMethod::Direct) {
      auto ldlt = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>();
      ldlt->compute(matrix);
      if (ldlt->info() != Eigen::Success)
        throw SolverError("sparse LDLT factorisation failed");
      impl_ = std::move(ldlt);
    } else {
      // CG holds a reference to the matrix, so it is owned here.
      matrix_ = std::make_shared<SparseMatrix>(std::move(matrix));
      auto cg = std::make_shared<ConjugateGradient>();
      cg->setTolerance(settings.rel_tol);
      cg->setMaxIterations(settings.max_iters);
      cg->compute(*matrix_);
      impl_ = std::move(cg);
    }
  }

  Vector solve(const Vector& rhs) const
  {
    if (rhs.size() == 0 || rhs.squaredNorm() == 0.0)
      return Vector::Zero(rhs.size());
    Vector x;
    if (auto* ldlt = std::get_if<std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>>>(&impl_)) {
      x = (*ldlt)->solve(rhs);
      if ((*ldlt)->info() != Eigen::Success)
        throw SolverError("sparse LDLT solve failed");
    } else {
      auto& cg = *std::get<std::shared_ptr<ConjugateGradient>>(impl_);
      x = cg.solve(rhs);
      if (cg.info() != Eigen::Success)
        throw SolverError("conjugate gradients did not converge within " +
                          std::to_string(settings_.max_iters) + " iterations (residual " +
                          std::to_string(cg.error()) + ")");
    }
    if (!x.allFinite())
      throw SolverError("linear solve produced non-finite values");
    return x;
  }

private:
  using ConjugateGradient = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                                                     Eigen::DiagonalPreconditioner<double>>;

  SolverSettings settings_;
  std::shared_ptr<SparseMatrix> matrix_;
  std::variant<std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>>,
               std::shared_ptr<ConjugateGradient>>
    impl_;
};

/// Harmonic mean of two nodal coefficients, used on the face between them.
inline double face_coefficient(double a, double b) { return 2.0 * a * b / (a + b); }

/// d face_coefficient(a, b) / da.
inline double face_coefficient_da(double a, double b) { return 2.0 * b * b / ((a + b) * (a + b)); }

/// Visits every grid face once as fn(node_a, node_b, geometric_factor) where
/// the factor is (face length) / (node distance) of the dual-cell face.
template <typename Fn>
void for_each_face(const Grid2D& g, Fn&& fn)
{
  const double hx = g.hx(), hy = g.hy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i + 1 < g.nx; ++i) {
      double len = (j == 0 || j == g.ny - 1) ? 0.5 * hy : hy;
      fn(g.index(i, j), g.index(i + 1, j), len / hx);
    }
  for (int j = 0; j + 1 < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double len = (i == 0 || i == g.nx - 1) ? 0.5 * hx : hx;
      fn(g.index(i, j), g.index(i, j + 1), len / hy);
    }
}

/// Stiffness matrix K on all nodes: v^T K w = sum_faces c_f (dv)(dw) len/dist,
/// the dual-cell discretisation of the form int c grad v . grad w.
/// `face_coeff(a, b)` receives the two node indices of a face.
template <typename FaceCoeff>
SparseMatrix assemble_stiffness(const Grid2D& g, FaceCoeff&& face_coeff)
{
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.size() * 5);
  for_each_face(g, [&](std::size_t a, std::size_t b, double geo) {
    double c = face_coeff(a, b) * geo;
    trip.emplace_back(a, a, c);
    trip.emplace_back(b, b, c);
    trip.emplace_back(a, b, -c);
    trip.emplace_back(b, a, -c);
  });
  SparseMatrix K(g.size(), g.size());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

inline SparseMatrix assemble_stiffness(const ScalarField& coeff)
{
  return assemble_stiffness(coeff.grid(), [&](std::size_t a, std::size_t b) {
    return face_coefficient(coeff[a], coeff[b]);
  });
}

inline void require_positive(const ScalarField& coeff)
{
  if (!(coeff.min() > 0.0) || !coeff.all_finite())
    throw InvalidArgument("elliptic coefficient must be strictly positive and finite");
}

inline Vector to_vector(const ScalarField& f)
{
  return Eigen::Map<const Vector>(f.values().data(), static_cast<Eigen::Index>(f.size()));
}

inline ScalarField to_field(const Grid2D& g, const Vector& v)
{
  return ScalarField(g, std::vector<double>(v.data(), v.data() + v.size()));
}

enum class BoundaryKind { Dirichlet, Neumann };

/// Assembled -div(coeff grad .) with its boundary treatment. Immutable after
/// construction; the linear solver state is shared between copies.
///
/// Dirichlet: unknowns are interior nodes; row p reads
///   sum_f c_f (w_p - w_q) / h_f^2 = rhs_p,
/// which is the stiffness row divided by the cell area and is symmetric.
/// Neumann: unknowns are all nodes of the weak form K v = b, with node 0
/// pinned so the reduced matrix is positive definite.
class EllipticSystem
{
public:
  EllipticSystem(const ScalarField& coeff, BoundaryKind kind, const SolverSettings& settings)
    : grid_(coeff.grid()), kind_(kind), coefficient_(coeff)
  {
    require_positive(coeff);
    settings.validate();
    SparseMatrix K = assemble_stiffness(coeff);
    if (kind == BoundaryKind::Dirichlet)
      build_dirichlet(K, settings);
    else
      build_neumann(K, settings);
  }

  const Grid2D& grid() const { return grid_; }
  BoundaryKind kind() const { return kind_; }
  const ScalarField& coefficient() const { return coefficient_; }

  /// Reduced matrix (interior block for Dirichlet, pinned block for Neumann).
  const SparseMatrix& matrix() const { return matrix_; }

  /// Coupling of interior rows to boundary nodes, ordered like the ring.
  const SparseMatrix& boundary_coupling() const { return coupling_; }

  /// Number of interior unknowns for the Dirichlet form.
  Eigen::Index unknowns() const { return matrix_.rows(); }

  /// w with -div(coeff grad w) = rhs at interior nodes and w = g on the ring.
  ScalarField solve_dirichlet(const ScalarField& rhs, const BoundaryTrace& g) const
  {
    require(kind_ == BoundaryKind::Dirichlet, "system was not assembled for Dirichlet data");
    require(rhs.grid() == grid_ && g.grid() == grid_, "data on a different grid");
    Vector b = restrict_interior(rhs);
    Eigen::Map<const Vector> gv(g.values().data(), static_cast<Eigen::Index>(g.size()));
    b -= coupling_ * gv;
    Vector x = solver_->solve(b);
    ScalarField w = with_boundary(ScalarField(grid_), g);
    scatter_interior(x, w);
    return w;
  }

  /// Applies the inverse of the interior block to an interior vector.
  Vector solve_interior(const Vector& b) const
  {
    require(kind_ == BoundaryKind::Dirichlet, "system was not assembled for Dirichlet data");
    return solver_->solve(b);
  }

  /// v with div(coeff grad v) = 0 and coeff dv/dn = flux in the weak sense;
  /// the flux mean is removed first and v is returned with zero mean.
  ScalarField solve_neumann(const BoundaryTrace& flux) const
  {
    require(kind_ == BoundaryKind::Neumann, "system was not assembled for Neumann data");
    require(flux.grid() == grid_, "flux on a different grid");
    const double shift = mean(flux);
    auto w = boundary_weights(grid_);
    auto ring = boundary_nodes(grid_);
    Vector b = Vector::Zero(static_cast<Eigen::Index>(grid_.size()));
    for (std::size_t k = 0; k < ring.size(); ++k)
      b[static_cast<Eigen::Index>(grid_.index(ring[k].i, ring[k].j))] += w[k] * (flux[k] - shift);
    return solve_pinned(b);
  }

  /// Solves K v = b for a full-node load vector b and returns the zero-mean
  /// representative. b is first made compatible by removing W * c, with W
  /// the nodal quadrature weights, so a load W * L loses exactly the mean of L.
  ScalarField solve_pinned(Vector b) const
  {
    require(kind_ == BoundaryKind::Neumann, "system was not assembled for Neumann data");
    Vector weights = to_vector(domain_weights(grid_));
    b -= weights * (b.sum() / weights.sum());
    Vector x = solver_->solve(b.tail(b.size() - 1));
    Vector full(b.size());
    full[0] = 0.0;
    full.tail(b.size() - 1) = x;
    ScalarField v = to_field(grid_, full);
    v += -mean(v);
    return v;
  }

  Vector restrict_interior(const ScalarField& f) const
  {
    Vector out(unknowns());
    Eigen::Index p = 0;
    for (int j = 1; j < grid_.ny - 1; ++j)
      for (int i = 1; i < grid_.nx - 1; ++i)
        out[p++] = f(i, j);
    return out;
  }

  void scatter_interior(const Vector& x, ScalarField& f) const
  {
    Eigen::Index p = 0;
    for (int j = 1; j < grid_.ny - 1; ++j)
      for (int i = 1; i < grid_.nx - 1; ++i)
        f(i, j) = x[p++];
  }

private:
  void build_dirichlet(const SparseMatrix& K, const SolverSettings& settings)
  {
    const auto& g = grid_;
    const double area = g.hx() * g.hy();
    std::vector<Eigen::Index> interior_id(g.size(), -1), ring_id(g.size(), -1);
    Eigen::Index p = 0;
    for (int j = 1; j < g.ny - 1; ++j)
      for (int i = 1; i < g.nx - 1; ++i)
        interior_id[g.index(i, j)] = p++;
    auto ring = boundary_nodes(g);
    for (std::size_t k = 0; k < ring.size(); ++k)
      ring_id[g.index(ring[k].i, ring[k].j)] = static_cast<Eigen::Index>(k);

    std::vector<Eigen::Triplet<double>> inner, coupling;
    for (int col = 0; col < K.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(K, col); it; ++it) {
        auto r = interior_id[static_cast<std::size_t>(it.row())];
        if (r < 0)
          continue;
        auto c = interior_id[static_cast<std::size_t>(it.col())];
        if (c >= 0)
          inner.emplace_back(r, c, it.value() / area);
        else
          coupling.emplace_back(r, ring_id[static_cast<std::size_t>(it.col())], it.value() / area);
      }
    matrix_.resize(p, p);
    matrix_.setFromTriplets(inner.begin(), inner.end());
    coupling_.resize(p, static_cast<Eigen::Index>(ring.size()));
    coupling_.setFromTriplets(coupling.begin(), coupling.end());
    solver_ = std::make_shared<SpdSolver>(matrix_, settings);
  }

  void build_neumann(const SparseMatrix& K, const SolverSettings& settings)
  {
    const Eigen::Index n = K.rows();
    matrix_ = K.bottomRightCorner(n - 1, n - 1);
    solver_ = std::make_shared<SpdSolver>(matrix_, settings);
  }

  Grid2D grid_;
  BoundaryKind kind_;
  ScalarField coefficient_;
  SparseMatrix matrix_;
  SparseMatrix coupling_;
  std::shared_ptr<const SpdSolver> solver_;
};

inline ScalarField solve_dirichlet(const ScalarField& coeff, const ScalarField& rhs,
                                   const BoundaryTrace& g, const SolverSettings& settings = {})
{
  return EllipticSystem(coeff, BoundaryKind::Dirichlet, settings).solve_dirichlet(rhs, g);
}

inline ScalarField solve_neumann(const ScalarField& coeff, const BoundaryTrace& flux,
                                 const SolverSettings& settings = {})
{
  return EllipticSystem(coeff, BoundaryKind::Neumann, settings).solve_neumann(flux);
}

/// Discrete harmonic extension of boundary data.
inline ScalarField solve_laplace_dirichlet(const BoundaryTrace& bdata,
                                           const SolverSettings& settings = {})
{
  const auto& g = bdata.grid();
  return solve_dirichlet(ScalarField(g, 1.0), ScalarField(g), bdata, settings);
}

} // namespace lsreg
