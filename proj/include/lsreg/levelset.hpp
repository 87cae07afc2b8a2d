#pragma once

// Level-set parametrisation u = psi1 * H(phi) + psi2 * (1 - H(phi)) of a
// two-phase coefficient whose phase values are themselves functions.

#include <cmath>

#include "lsreg/grid.hpp"

namespace lsreg {

/// Sharp Heaviside projector: 1 on {phi > 0}, 0 elsewhere.
inline double heaviside(double t) { return t > 0.0 ? 1.0 : 0.0; }

/// Piecewise-linear Heaviside with a one-sided transition band [-eps, 0].
inline double heaviside_smooth(double t, double eps)
{
  require(eps > 0.0, "smoothing width must be positive");
  if (t > 0.0)
    return 1.0;
  if (t < -eps)
    return 0.0;
  return 1.0 + t / eps;
}

/// Derivative of heaviside_smooth; zero at the kinks t = -eps and t = 0.
inline double heaviside_smooth_deriv(double t, double eps)
{
  require(eps > 0.0, "smoothing width must be positive");
  return (t > -eps && t < 0.0) ? 1.0 / eps : 0.0;
}

inline ScalarField heaviside(const ScalarField& phi)
{
  return map(phi, [](double t) { return heaviside(t); });
}

inline ScalarField heaviside_smooth(const ScalarField& phi, double eps)
{
  require(eps > 0.0, "smoothing width must be positive");
  return map(phi, [eps](double t) { return heaviside_smooth(t, eps); });
}

inline ScalarField heaviside_smooth_deriv(const ScalarField& phi, double eps)
{
  require(eps > 0.0, "smoothing width must be positive");
  return map(phi, [eps](double t) { return heaviside_smooth_deriv(t, eps); });
}

/// Bounds [m, M] of the admissible set for the phase values.
struct AdmissibleBox
{
  double m = 0.0;
  double M = 1.0;

  AdmissibleBox() = default;
  AdmissibleBox(double lo, double hi) : m(lo), M(hi)
  {
    require(lo < hi, "admissible box needs m < M");
  }

  double mid() const { return 0.5 * (m + M); }
  bool contains(double v) const { return v >= m && v <= M; }
  bool contains(const ScalarField& f) const { return f.min() >= m && f.max() <= M; }
};

struct LevelSetState
{
  ScalarField phi;
  ScalarField psi1;
  ScalarField psi2;
  double eps = 0.0;

  const Grid2D& grid() const { return phi.grid(); }
};

/// Default band width: two cells.
inline double default_eps(const Grid2D& g) { return 2.0 * std::max(g.hx(), g.hy()); }

/// Pointwise convex combination psi1 * z + psi2 * (1 - z).
inline ScalarField apply_q(const ScalarField& z, const ScalarField& psi1, const ScalarField& psi2)
{
  z.check_same(psi1);
  z.check_same(psi2);
  constexpr double tol = 1e-12;
  ScalarField out(z.grid());
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!(z[k] >= -tol && z[k] <= 1.0 + tol))
      throw InvalidArgument("indicator value outside [0, 1]");
    out[k] = psi1[k] * z[k] + psi2[k] * (1.0 - z[k]);
  }
  return out;
}

/// Smoothed projector P_eps(phi, psi1, psi2).
inline ScalarField project(const LevelSetState& s)
{
  return apply_q(heaviside_smooth(s.phi, s.eps), s.psi1, s.psi2);
}

/// Sharp projector P(phi, psi1, psi2).
inline ScalarField project_sharp(const ScalarField& phi, const ScalarField& psi1,
                                 const ScalarField& psi2)
{
  return apply_q(heaviside(phi), psi1, psi2);
}

inline ScalarField clamp_to_box(const ScalarField& f, const AdmissibleBox& box)
{
  return map(f, [&](double v) { return std::clamp(v, box.m, box.M); });
}

struct Betas
{
  double shape_tv = 1.0;  // beta1, weight of |H_eps(phi)|_TV
  double phi_h1 = 1.0;    // beta2, weight of ||phi - phi0||_H1^2
  double levels_tv = 1.0; // beta3, weight of sum_j |psi_j - psi0_j|_TV
};

struct RegularizationParts
{
  double shape_tv = 0.0;
  double phi_h1 = 0.0;
  double levels_tv = 0.0;

  double total() const { return shape_tv + phi_h1 + levels_tv; }
};

/// Penalty R with every BV seminorm replaced by its smoothed grid version.
/// The addends are returned already multiplied by their beta weights.
inline RegularizationParts evaluate_R(const LevelSetState& s, const ScalarField& phi0,
                                      const ScalarField& psi0_1, const ScalarField& psi0_2,
                                      const Betas& betas, double beta_tv)
{
  require(betas.shape_tv >= 0.0 && betas.phi_h1 >= 0.0 && betas.levels_tv >= 0.0,
          "penalty weights must be non-negative");
  RegularizationParts parts;
  parts.shape_tv =
    betas.shape_tv * norm(heaviside_smooth(s.phi, s.eps), NormKind::TVSmoothed, beta_tv);
  double h1 = norm(s.phi - phi0, NormKind::H1);
  parts.phi_h1 = betas.phi_h1 * h1 * h1;
  parts.levels_tv = betas.levels_tv * (norm(s.psi1 - psi0_1, NormKind::TVSmoothed, beta_tv) +
                                       norm(s.psi2 - psi0_2, NormKind::TVSmoothed, beta_tv));
  return parts;
}

/// Signed distance to a disk, positive inside.
inline ScalarField signed_distance_disk(const Grid2D& g, double cx, double cy, double radius)
{
  return ScalarField::sample(g, [=](double x, double y) {
    return radius - std::hypot(x - cx, y - cy);
  });
}

} // namespace lsreg
