#pragma once

// Tikhonov objective
//   G = ||F(P_eps(phi, psi1, psi2)) - y||^2
//       + alpha (b1 |H_eps(phi)|_TV + b2 ||phi - phi0||_H1^2 + b3 sum_j |psi_j - psi0_j|_TV)
// and the level-set iteration minimising it: forward solve, adjoint, the
// L-terms of the optimality system, then an explicit or semi-implicit update
// with step 1/alpha, optionally safeguarded by backtracking.

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lsreg/operators.hpp"

namespace lsreg {

enum class UpdateScheme { Explicit, SemiImplicit };
enum class StopReason { Discrepancy, MaxIters, StepCollapse };

inline const char* to_string(StopReason r)
{
  switch (r) {
  case StopReason::Discrepancy:
    return "Discrepancy";
  case StopReason::MaxIters:
    return "MaxIters";
  case StopReason::StepCollapse:
    return "StepCollapse";
  }
  return "?";
}

/// alpha(delta) = c * delta^p.
struct AlphaRule
{
  double c = 1.0;
  double p = 1.0;
};

struct InversionConfig
{
  double alpha = 1.0;
  std::optional<AlphaRule> alpha_rule;
  Betas betas;
  double eps0 = 0.0; ///< 0 selects two cells
  double eps_decay = 1.0;
  double beta_tv = 1e-3;
  UpdateScheme scheme = UpdateScheme::Explicit;
  /// Negate the update direction built from the L-terms. Unset selects the
  /// descent orientation for the scheme: flipped for Explicit, literal for
  /// SemiImplicit.
  std::optional<bool> sign_flip;
  bool backtracking = true;
  double shrink = 0.5;
  int max_halvings = 20;
  double tau = 1.5;
  int max_iters = 500;
  AdjointMode adjoint_mode = AdjointMode::DiscreteAdjoint;
  /// Bounds for the phase values; the conductivity problem uses its own box.
  AdmissibleBox box{0.5, 3.5};

  void validate() const
  {
    require(alpha > 0.0, "reg.alpha must be positive");
    if (alpha_rule) {
      require(alpha_rule->c > 0.0, "reg.alpha_rule.c must be positive");
      require(alpha_rule->p > 0.0 && alpha_rule->p < 2.0, "reg.alpha_rule.p must lie in (0, 2)");
    }
    require(betas.shape_tv >= 0.0 && betas.phi_h1 > 0.0 && betas.levels_tv > 0.0,
            "reg.beta1 must be >= 0 and reg.beta2, reg.beta3 > 0");
    require(eps0 >= 0.0, "reg.eps0 must be non-negative");
    require(eps_decay > 0.0 && eps_decay <= 1.0, "reg.eps_decay must lie in (0, 1]");
    require(beta_tv > 0.0, "reg.beta_tv must be positive");
    require(shrink > 0.0 && shrink < 1.0, "backtracking shrink must lie in (0, 1)");
    require(max_halvings >= 0, "backtracking halvings must be non-negative");
    require(tau > 1.0, "stop.tau must exceed 1");
    require(max_iters >= 0, "stop.max_iters must be non-negative");
  }

  bool flip() const { return sign_flip.value_or(scheme == UpdateScheme::Explicit); }

  /// Regularisation parameter for a noise level. Exact data keeps `alpha`.
  double alpha_for(double delta_abs) const
  {
    if (alpha_rule && delta_abs > 0.0)
      return alpha_rule->c * std::pow(delta_abs, alpha_rule->p);
    return alpha;
  }

  double eps_at(const Grid2D& g, int iteration) const
  {
    double e0 = eps0 > 0.0 ? eps0 : default_eps(g);
    return e0 * std::pow(eps_decay, iteration);
  }
};

struct PriorData
{
  ScalarField phi0;
  ScalarField psi0_1;
  ScalarField psi0_2;
};

/// Signed distance to a centred disk of radius 0.25 (in units of the shorter
/// side) and mid-box phase values.
inline PriorData default_prior(const Grid2D& g, const AdmissibleBox& box)
{
  double cx = 0.5 * (g.x0 + g.x1), cy = 0.5 * (g.y0 + g.y1);
  double r = 0.25 * std::min(g.x1 - g.x0, g.y1 - g.y0);
  return {signed_distance_disk(g, cx, cy, r), ScalarField(g, box.mid()), ScalarField(g, box.mid())};
}

inline LevelSetState state_from_prior(const PriorData& prior, double eps)
{
  return {prior.phi0, prior.psi0_1, prior.psi0_2, eps};
}

inline const AdmissibleBox& admissible_box(const Problem& p, const InversionConfig& cfg)
{
  if (auto* c = std::get_if<ConductivityProblem>(&p))
    return c->box;
  return cfg.box;
}

struct ObjectiveValue
{
  double total = 0.0;
  double misfit = 0.0;
  double residual_norm = 0.0;
  RegularizationParts penalties;
};

/// Objective value together with the forward quantities it was built from.
struct Evaluation
{
  ObjectiveValue objective;
  ScalarField u;
  ForwardResult forward;
  BoundaryTrace residual;
};

inline Evaluation evaluate(const LevelSetState& s, const BoundaryTrace& data, const Problem& prob,
                           const PriorData& prior, const InversionConfig& cfg)
{
  Evaluation e;
  e.u = project(s);
  e.forward = forward(prob, e.u);
  e.residual = e.forward.y - data;
  e.objective.residual_norm = l2_norm(e.residual);
  e.objective.misfit = e.objective.residual_norm * e.objective.residual_norm;
  e.objective.penalties =
    evaluate_R(s, prior.phi0, prior.psi0_1, prior.psi0_2, cfg.betas, cfg.beta_tv);
  e.objective.total = e.objective.misfit + cfg.alpha * e.objective.penalties.total();
  return e;
}

inline ObjectiveValue evaluate_objective(const LevelSetState& s, const BoundaryTrace& data,
                                         const Problem& prob, const PriorData& prior,
                                         const InversionConfig& cfg)
{
  return evaluate(s, data, prob, prior, cfg).objective;
}

struct LTerms
{
  ScalarField phi;
  ScalarField psi1;
  ScalarField psi2;
};

/// Right-hand sides of the optimality system:
///   L   = (psi1 - psi2)/b2 H'(phi) F'* r - b1/(2 b2) H'(phi) div(grad H / |grad H|)
///   L^1 = 1/(2 b3) H(phi) F'* r
///   L^2 = 1/(2 b3) (1 - H(phi)) F'* r
/// with F'* r the adjoint of the current linearisation applied to r.
inline LTerms compute_L_terms(const LevelSetState& s, const BoundaryTrace& residual,
                              const ForwardResult& fwd, const Problem& prob,
                              const InversionConfig& cfg)
{
  require(cfg.betas.phi_h1 > 0.0 && cfg.betas.levels_tv > 0.0,
          "beta2 and beta3 must be positive to form the L-terms");
  const ScalarField u = project(s);
  const ScalarField adj = adjoint(prob, u, fwd, residual, cfg.adjoint_mode);
  const ScalarField H = heaviside_smooth(s.phi, s.eps);
  const ScalarField dH = heaviside_smooth_deriv(s.phi, s.eps);
  const ScalarField curv = curvature_div(H, cfg.beta_tv);

  const double b1 = cfg.betas.shape_tv, b2 = cfg.betas.phi_h1, b3 = cfg.betas.levels_tv;
  LTerms L{ScalarField(s.grid()), ScalarField(s.grid()), ScalarField(s.grid())};
  for (std::size_t k = 0; k < u.size(); ++k) {
    L.phi[k] = (s.psi1[k] - s.psi2[k]) / b2 * dH[k] * adj[k] - b1 / (2.0 * b2) * dH[k] * curv[k];
    L.psi1[k] = H[k] * adj[k] / (2.0 * b3);
    L.psi2[k] = (1.0 - H[k]) * adj[k] / (2.0 * b3);
  }
  return L;
}

/// Update directions; a step of length s moves the state by s * increment.
struct Increments
{
  ScalarField phi;
  ScalarField psi1;
  ScalarField psi2;

  bool is_zero() const
  {
    auto zero = [](const ScalarField& f) { return f.min() == 0.0 && f.max() == 0.0; };
    return zero(phi) && zero(psi1) && zero(psi2);
  }
};

/// Explicit scheme: the increments are the L-terms themselves.
inline Increments explicit_increments(const LTerms& L, const InversionConfig& cfg)
{
  const double d = cfg.flip() ? -1.0 : 1.0;
  return {L.phi * d, L.psi1 * d, L.psi2 * d};
}

/// Semi-implicit scheme:
///   alpha (Lap - I) dphi = L          with homogeneous Neumann data,
///   alpha div(grad dpsi_j / q_j) = L^j, q_j = sqrt(|grad(psi_j - psi0_j)|^2 + beta_tv^2)
/// frozen at the current iterate, Neumann data and zero mean. Both sides are
/// negated when the sign is flipped.
inline Increments semi_implicit_increments(const LevelSetState& s, const LTerms& L,
                                           const PriorData& prior, const InversionConfig& cfg,
                                           const SolverSettings& settings)
{
  const Grid2D& g = s.grid();
  const double d = cfg.flip() ? -1.0 : 1.0;
  const double a = cfg.alpha;
  const Vector weights = to_vector(domain_weights(g));

  // Weighted form: (W + K) dphi = -d W L / alpha, since W Lap = -K.
  SparseMatrix screened = assemble_stiffness(g, [](std::size_t, std::size_t) { return 1.0; });
  for (Eigen::Index k = 0; k < weights.size(); ++k)
    screened.coeffRef(k, k) += weights[k];
  Vector rhs_phi = -d / a * weights.cwiseProduct(to_vector(L.phi));
  Increments inc;
  inc.phi = to_field(g, SpdSolver(std::move(screened), settings).solve(rhs_phi));

  auto level_step = [&](const ScalarField& psi, const ScalarField& psi0, const ScalarField& Lj) {
    auto grad = gradient(psi - psi0);
    ScalarField diffusivity(g);
    for (std::size_t k = 0; k < diffusivity.size(); ++k)
      diffusivity[k] = 1.0 / std::sqrt(grad.x[k] * grad.x[k] + grad.y[k] * grad.y[k] +
                                       cfg.beta_tv * cfg.beta_tv);
    EllipticSystem sys(diffusivity, BoundaryKind::Neumann, settings);
    // alpha div(c grad dpsi) = d Lj  <=>  K dpsi = -d W Lj / alpha.
    return sys.solve_pinned(-d / a * weights.cwiseProduct(to_vector(Lj)));
  };
  inc.psi1 = level_step(s.psi1, prior.psi0_1, L.psi1);
  inc.psi2 = level_step(s.psi2, prior.psi0_2, L.psi2);
  return inc;
}

/// state + step * increments, phase values clamped to the box.
inline LevelSetState apply_step(const LevelSetState& s, const Increments& inc, double step,
                                const AdmissibleBox& box)
{
  LevelSetState out = s;
  out.phi += inc.phi * step;
  out.psi1 = clamp_to_box(s.psi1 + inc.psi1 * step, box);
  out.psi2 = clamp_to_box(s.psi2 + inc.psi2 * step, box);
  return out;
}

struct StepContext
{
  const Problem& problem;
  const BoundaryTrace& data;
  const PriorData& prior;
  const InversionConfig& config;
};

struct StepResult
{
  LevelSetState state;
  Evaluation evaluation;
  double step = 0.0;
  int halvings = 0;
  bool collapsed = false;
};

/// Takes the step 1/alpha along `inc`. With backtracking the step is halved
/// until the objective drops below `current`; if it never does the state is
/// returned unchanged and the result is marked collapsed.
inline StepResult line_search(const LevelSetState& s, const Increments& inc,
                              const Evaluation& current, const StepContext& ctx)
{
  const auto& cfg = ctx.config;
  const auto& box = admissible_box(ctx.problem, cfg);
  double step = 1.0 / cfg.alpha;

  if (!cfg.backtracking) {
    LevelSetState trial = apply_step(s, inc, step, box);
    Evaluation e = evaluate(trial, ctx.data, ctx.problem, ctx.prior, cfg);
    return {std::move(trial), std::move(e), step, 0, false};
  }
  if (inc.is_zero())
    return {s, current, 0.0, 0, true};

  for (int h = 0; h <= cfg.max_halvings; ++h, step *= cfg.shrink) {
    LevelSetState trial = apply_step(s, inc, step, box);
    Evaluation e = evaluate(trial, ctx.data, ctx.problem, ctx.prior, cfg);
    if (e.objective.total < current.objective.total)
      return {std::move(trial), std::move(e), step, h, false};
  }
  return {s, current, 0.0, cfg.max_halvings, true};
}

inline StepResult update_explicit(const LevelSetState& s, const LTerms& L,
                                  const Evaluation& current, const StepContext& ctx)
{
  return line_search(s, explicit_increments(L, ctx.config), current, ctx);
}

inline StepResult update_semi_implicit(const LevelSetState& s, const LTerms& L,
                                       const Evaluation& current, const StepContext& ctx)
{
  const SolverSettings settings =
    std::visit([](const auto& p) { return p.settings; }, ctx.problem);
  return line_search(s, semi_implicit_increments(s, L, ctx.prior, ctx.config, settings), current,
                     ctx);
}

struct IterationRecord
{
  int iteration = 0;
  double misfit = 0.0;
  double residual_norm = 0.0;
  RegularizationParts penalties;
  double total = 0.0;
  double step = 0.0;
  int halvings = 0;
  double eps = 0.0;
  std::optional<double> l1_error;
  // Admissibility audit of the recorded iterate.
  double psi_min = 0.0;
  double psi_max = 0.0;
  double heaviside_min = 0.0;
  double heaviside_max = 0.0;
};

struct RunReport
{
  std::vector<IterationRecord> history;
  StopReason stop_reason = StopReason::MaxIters;
  LevelSetState final_state;
  double alpha = 0.0;
  double delta_abs = 0.0;
  double wall_time_s = 0.0;
};

/// Relative L1 distance ||u - truth||_1 / ||truth||_1.
inline double relative_l1_error(const ScalarField& u, const ScalarField& truth)
{
  return norm(u - truth, NormKind::L1) / norm(truth, NormKind::L1);
}

/// Iterates forward solve, adjoint, L-terms and update until the residual
/// reaches tau * delta_abs, the iteration budget is spent, or backtracking
/// fails to find a decrease. delta_abs = 0 disables the discrepancy test.
/// Starts from `initial`, or from the prior when none is given.
inline RunReport run_inversion(const Problem& prob, const BoundaryTrace& data, double delta_abs,
                               const PriorData& prior, InversionConfig cfg,
                               const std::optional<ScalarField>& truth = std::nullopt,
                               const std::optional<LevelSetState>& initial = std::nullopt)
{
  const auto t0 = std::chrono::steady_clock::now();
  require(delta_abs >= 0.0, "noise level must be non-negative");
  require(data.grid() == problem_grid(prob), "data on a different grid than the problem");
  cfg.alpha = cfg.alpha_for(delta_abs);
  cfg.validate();

  const Grid2D& g = problem_grid(prob);
  LevelSetState state = initial ? *initial : state_from_prior(prior, cfg.eps_at(g, 0));
  state.psi1 = clamp_to_box(state.psi1, admissible_box(prob, cfg));
  state.psi2 = clamp_to_box(state.psi2, admissible_box(prob, cfg));
  StepContext ctx{prob, data, prior, cfg};

  RunReport report;
  report.alpha = cfg.alpha;
  report.delta_abs = delta_abs;

  auto record = [&](int k, const Evaluation& e, double step, int halvings) {
    IterationRecord r;
    r.iteration = k;
    r.misfit = e.objective.misfit;
    r.residual_norm = e.objective.residual_norm;
    r.penalties = e.objective.penalties;
    r.total = e.objective.total;
    r.step = step;
    r.halvings = halvings;
    r.eps = state.eps;
    if (truth)
      r.l1_error = relative_l1_error(e.u, *truth);
    r.psi_min = std::min(state.psi1.min(), state.psi2.min());
    r.psi_max = std::max(state.psi1.max(), state.psi2.max());
    auto H = heaviside_smooth(state.phi, state.eps);
    r.heaviside_min = H.min();
    r.heaviside_max = H.max();
    report.history.push_back(r);
  };

  Evaluation current = evaluate(state, data, prob, prior, cfg);
  record(0, current, 0.0, 0);

  auto discrepancy_met = [&] {
    return delta_abs > 0.0 && current.objective.residual_norm <= cfg.tau * delta_abs;
  };

  report.stop_reason = StopReason::MaxIters;
  for (int k = 0;; ++k) {
    if (discrepancy_met()) {
      report.stop_reason = StopReason::Discrepancy;
      break;
    }
    if (k >= cfg.max_iters) {
      report.stop_reason = StopReason::MaxIters;
      break;
    }
    LTerms L = compute_L_terms(state, current.residual, current.forward, prob, cfg);
    StepResult res = cfg.scheme == UpdateScheme::Explicit
                       ? update_explicit(state, L, current, ctx)
                       : update_semi_implicit(state, L, current, ctx);
    if (res.collapsed) {
      report.stop_reason = StopReason::StepCollapse;
      break;
    }
    state = std::move(res.state);
    current = std::move(res.evaluation);
    const double next_eps = cfg.eps_at(g, k + 1);
    if (next_eps != state.eps) {
      state.eps = next_eps;
      current = evaluate(state, data, prob, prior, cfg);
    }
    record(k + 1, current, res.step, res.halvings);
  }

  report.final_state = std::move(state);
  report.wall_time_s =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

} // namespace lsreg
