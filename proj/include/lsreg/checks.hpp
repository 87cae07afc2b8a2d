#pragma once

// Acceptance checks: each returns a pass/fail line with the measured values.
// Shared by the acceptance test binary and `lsreg check`.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lsreg/experiment.hpp"

namespace lsreg::checks {

struct CheckResult
{
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

inline std::string format_line(const CheckResult& r)
{
  std::ostringstream os;
  os << (r.passed ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.name << ": " << r.detail
     << " (" << std::fixed;
  os.precision(2);
  os << r.seconds << " s)";
  return os.str();
}

/// Admissibility audit collected over every run the suite performs.
struct Audit
{
  std::size_t records = 0;
  std::size_t violations = 0;

  void add(const RunReport& r, const AdmissibleBox& box)
  {
    for (const auto& rec : r.history) {
      ++records;
      if (rec.psi_min < box.m || rec.psi_max > box.M || rec.heaviside_min < 0.0 ||
          rec.heaviside_max > 1.0)
        ++violations;
    }
  }
};

namespace detail {

template <class Fn>
CheckResult timed(int id, std::string name, Fn&& fn)
{
  auto t0 = std::chrono::steady_clock::now();
  CheckResult r{id, std::move(name), false, {}, 0.0};
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline std::string num(double v, int precision = 4)
{
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

inline double field_l2(const ScalarField& f) { return std::sqrt(inner(f, f)); }

} // namespace detail

// ---------------------------------------------------------------------------
// Experiment configurations used by the end-to-end checks.

/// Reference phantom, potential problem, explicit scheme, alpha = 0.1 delta.
inline ExperimentConfig reference_config()
{
  ExperimentConfig cfg;
  cfg.nx = cfg.ny = 64;
  cfg.kind = ProblemKind::Potential;
  cfg.noise = {0.01, 42};
  auto& inv = cfg.inversion;
  inv.alpha = 1e-4;
  inv.alpha_rule = AlphaRule{0.1, 1.0};
  inv.betas = {0.01, 1.0, 0.5};
  inv.scheme = UpdateScheme::Explicit;
  inv.max_iters = 500;
  inv.box = cfg.phantom.box;
  return cfg;
}

/// Exact-data descent runs: 50 iterations per scheme.
inline ExperimentConfig descent_config(UpdateScheme scheme)
{
  ExperimentConfig cfg = reference_config();
  cfg.noise.delta_rel = 0.0;
  cfg.inversion.max_iters = 50;
  cfg.inversion.scheme = scheme;
  if (scheme == UpdateScheme::SemiImplicit) {
    cfg.kind = ProblemKind::Conductivity;
    cfg.inversion.alpha = 1e-2;
    cfg.inversion.betas = {0.01, 0.1, 0.1};
  }
  return cfg;
}

// ---------------------------------------------------------------------------

/// Manufactured solutions on 32, 64 and 128 nodes per axis; the error ratio
/// between consecutive grids must lie in [2.5, 6] for a constant and a
/// variable coefficient.
inline CheckResult solver_order()
{
  return detail::timed(1, "solver order", [](CheckResult& r) {
    using std::numbers::pi;
    auto exact = [](double x, double y) { return std::exp(x) * std::sin(pi * y) + x * y * y; };
    // grad w and its divergence pieces.
    auto wx = [](double x, double y) { return std::exp(x) * std::sin(pi * y) + y * y; };
    auto wy = [](double x, double y) { return pi * std::exp(x) * std::cos(pi * y) + 2 * x * y; };
    auto lap = [](double x, double y) {
      return std::exp(x) * std::sin(pi * y) * (1 - pi * pi) + 2 * x;
    };
    struct Case
    {
      const char* name;
      std::function<double(double, double)> a, ax, ay;
    };
    std::vector<Case> cases{
      {"constant", [](double, double) { return 1.0; }, [](double, double) { return 0.0; },
       [](double, double) { return 0.0; }},
      {"variable", [](double x, double y) { return 1.5 + std::sin(2 * pi * x) * std::cos(pi * y); },
       [](double x, double y) { return 2 * pi * std::cos(2 * pi * x) * std::cos(pi * y); },
       [](double x, double y) { return -pi * std::sin(2 * pi * x) * std::sin(pi * y); }},
    };
    SolverSettings settings{SolverMethod::ConjugateGradient, 1e-12, 20000};
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
      std::vector<double> errs;
      for (int n : {32, 64, 128}) {
        Grid2D g = Grid2D::unit_square(n);
        auto coeff = ScalarField::sample(g, c.a);
        auto rhs = ScalarField::sample(g, [&](double x, double y) {
          return -(c.a(x, y) * lap(x, y) + c.ax(x, y) * wx(x, y) + c.ay(x, y) * wy(x, y));
        });
        auto truth = ScalarField::sample(g, exact);
        auto w = solve_dirichlet(coeff, rhs, boundary_trace(truth), settings);
        errs.push_back(detail::field_l2(w - truth) / detail::field_l2(truth));
      }
      double r1 = errs[0] / errs[1], r2 = errs[1] / errs[2];
      ok = ok && r1 >= 2.5 && r1 <= 6.0 && r2 >= 2.5 && r2 <= 6.0;
      detail += std::string(c.name) + " ratios " + detail::num(r1, 3) + ", " + detail::num(r2, 3) + "; ";
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.detail = detail + "runtime " + detail::num(secs, 3) + " s (limit 10 s)";
    r.passed = ok && secs < 10.0;
  });
}

/// <F1 u, r>_ring against <u, F1* r>_dom for 20 seeded pairs on 8..32 grids.
inline CheckResult adjoint_identity()
{
  return detail::timed(2, "adjoint identity", [](CheckResult& r) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    SolverSettings settings{SolverMethod::Direct, 1e-12, 20000};
    const int sizes[] = {8, 12, 16, 24, 32};
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Grid2D g = Grid2D::unit_square(sizes[trial % 5]);
      PotentialProblem prob(ScalarField(g, 1.0), BoundaryTrace(g), settings);
      ScalarField u(g);
      for (std::size_t k = 0; k < u.size(); ++k)
        u[k] = U(rng);
      BoundaryTrace res(g);
      for (std::size_t k = 0; k < res.size(); ++k)
        res[k] = U(rng);
      double lhs = inner(f1_forward(u, prob).y, res);
      double rhs = inner(u, f1_adjoint(res, prob));
      worst = std::max(worst, std::abs(lhs - rhs) / (detail::field_l2(u) * l2_norm(res)));
    }
    r.passed = worst < 1e-8;
    r.detail = "worst relative gap " + detail::num(worst, 3) + " (tol 1e-8)";
  });
}

/// Adjoint directional derivative of the misfit against central differences
/// with step 1e-4, five directions per problem on 32 nodes per axis.
inline CheckResult gradient_fidelity()
{
  return detail::timed(3, "gradient fidelity", [](CheckResult& r) {
    const Grid2D g = Grid2D::unit_square(32);
    SolverSettings settings{SolverMethod::Direct, 1e-12, 20000};
    PhantomSpec spec;
    auto truth = make_phantom(spec, g).u_true;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto random_field = [&](double scale) {
      ScalarField f(g);
      for (std::size_t k = 0; k < f.size(); ++k)
        f[k] = scale * U(rng);
      return f;
    };
    const double tau = 1e-4;
    ScalarField base = ScalarField(g, 2.0) + random_field(0.3);

    std::vector<Problem> problems{
      PotentialProblem(ScalarField(g, 1.0), BoundaryTrace(g), settings),
      ConductivityProblem(ScalarField(g), excitation_trace(g, "x"), spec.box, settings)};
    const char* names[] = {"potential", "conductivity"};
    double worst[2] = {0.0, 0.0};
    for (std::size_t p = 0; p < problems.size(); ++p) {
      const auto& prob = problems[p];
      auto data = forward(prob, truth).y;
      auto misfit = [&](const ScalarField& u) {
        double n = l2_norm(forward(prob, u).y - data);
        return n * n;
      };
      auto fwd = forward(prob, base);
      auto res = fwd.y - data;
      // Gradient of ||F(u) - y||^2 is twice the adjoint applied to the residual.
      ScalarField grad = adjoint(prob, base, fwd, res, AdjointMode::DiscreteAdjoint) * 2.0;
      for (int d = 0; d < 5; ++d) {
        ScalarField dir = random_field(1.0);
        double analytic = inner(grad, dir);
        double fd = (misfit(base + dir * tau) - misfit(base - dir * tau)) / (2 * tau);
        worst[p] = std::max(worst[p], std::abs(fd - analytic) / std::abs(analytic));
      }
    }
    r.passed = worst[0] < 1e-3 && worst[1] < 1e-3;
    r.detail = std::string(names[0]) + " " + detail::num(worst[0], 3) + ", " + names[1] + " " +
               detail::num(worst[1], 3) + " (tol 1e-3)";
  });
}

/// ||H_eps(phi) - H(phi)||_L1 for eps = 8h, 4h, 2h on 128 nodes; each halving
/// of eps must halve the error within 20%.
inline CheckResult heaviside_smoothing()
{
  return detail::timed(4, "heaviside smoothing", [](CheckResult& r) {
    const Grid2D g = Grid2D::unit_square(128);
    auto phi = signed_distance_disk(g, 0.5, 0.5, 0.3);
    auto sharp = heaviside(phi);
    const double h = g.hx();
    std::vector<double> errs;
    for (double k : {8.0, 4.0, 2.0})
      errs.push_back(norm(heaviside_smooth(phi, k * h) - sharp, NormKind::L1));
    bool ok = true;
    std::string detail = "ratios";
    for (std::size_t k = 1; k < errs.size(); ++k) {
      double ratio = errs[k] / errs[k - 1];
      ok = ok && std::abs(ratio - 0.5) <= 0.1;
      detail += " " + detail::num(ratio, 4);
    }
    r.passed = ok;
    r.detail = detail + " (target 0.5 +- 20%)";
  });
}

/// Smoothed TV of H_eps(phi) for the radius 0.3 disk against its perimeter.
inline CheckResult perimeter_recovery()
{
  return detail::timed(5, "perimeter recovery", [](CheckResult& r) {
    const Grid2D g = Grid2D::unit_square(128);
    auto phi = signed_distance_disk(g, 0.5, 0.5, 0.3);
    double tv = norm(heaviside_smooth(phi, 2.0 * g.hx()), NormKind::TVSmoothed, 1e-6);
    double exact = 2.0 * std::numbers::pi * 0.3;
    double rel = std::abs(tv - exact) / exact;
    r.passed = rel < 0.10;
    r.detail = "TV " + detail::num(tv, 6) + " vs " + detail::num(exact, 6) + ", rel err " +
               detail::num(rel, 3) + " (tol 0.10)";
  });
}

inline std::size_t objective_increases(const RunReport& rep)
{
  std::size_t n = 0;
  for (std::size_t k = 1; k < rep.history.size(); ++k)
    if (rep.history[k].total > rep.history[k - 1].total)
      ++n;
  return n;
}

/// 50 iterations with backtracking; the objective sequence must never rise.
/// A collapsed step leaves the state, and so the objective, unchanged for the
/// rest of the budget.
inline CheckResult monotone_descent(Audit& audit)
{
  return detail::timed(6, "monotone descent", [&](CheckResult& r) {
    bool ok = true;
    std::string detail;
    for (auto scheme : {UpdateScheme::Explicit, UpdateScheme::SemiImplicit}) {
      auto cfg = descent_config(scheme);
      auto res = run_experiment(cfg, false);
      audit.add(res.report, cfg.phantom.box);
      auto bad = objective_increases(res.report);
      ok = ok && bad == 0 && res.report.history.size() > 1;
      detail += std::string(to_string(scheme)) + "/" + to_string(cfg.kind) + ": " +
                std::to_string(res.report.history.size() - 1) + " accepted steps, stop " +
                to_string(res.report.stop_reason) + ", " + std::to_string(bad) + " increases; ";
    }
    r.passed = ok;
    r.detail = detail;
  });
}

/// Reference phantom at 1% noise: discrepancy stop within 500 iterations,
/// relative L1 error of u down by at least half, under five minutes.
inline CheckResult end_to_end(Audit& audit)
{
  return detail::timed(7, "end-to-end reconstruction", [&](CheckResult& r) {
    auto cfg = reference_config();
    auto res = run_experiment(cfg, false);
    audit.add(res.report, cfg.phantom.box);
    const auto& h = res.report.history;
    double e0 = *h.front().l1_error, e1 = *h.back().l1_error;
    double drop = 1.0 - e1 / e0;
    bool stopped = res.report.stop_reason == StopReason::Discrepancy && h.back().iteration <= 500;
    bool fast = res.report.wall_time_s < 300.0;
    r.passed = stopped && drop >= 0.5 && fast;
    r.detail = std::string("stop ") + to_string(res.report.stop_reason) + " at iteration " +
               std::to_string(h.back().iteration) + ", L1 error " + detail::num(e0) + " -> " +
               detail::num(e1) + " (drop " + detail::num(100 * drop, 3) +
               "%, need >= 50%), wall " + detail::num(res.report.wall_time_s, 3) + " s";
  });
}

/// Noise levels 4%, 2%, 1% with alpha = c delta, then exact data.
inline CheckResult stability_sweep(Audit& audit)
{
  return detail::timed(8, "stability sweep", [&](CheckResult& r) {
    auto cfg = reference_config();
    cfg.inversion.max_iters = 200;
    const std::vector<double> deltas{0.04, 0.02, 0.01, 0.0};
    std::vector<SweepRow> rows;
    for (double d : deltas) {
      auto c = cfg;
      c.noise.delta_rel = d;
      auto res = run_experiment(c, false);
      audit.add(res.report, c.phantom.box);
      const auto& last = res.report.history.back();
      rows.push_back({d, res.report.alpha, last.misfit, last.l1_error.value_or(0.0), last.iteration,
                      to_string(res.report.stop_reason), {}});
    }
    bool ok = true;
    std::string detail = "L1";
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
      detail += " " + detail::num(rows[k].l1_error_u);
      if (k > 0 && rows[k].l1_error_u > 1.05 * rows[k - 1].l1_error_u)
        ok = false;
    }
    detail += "; misfit";
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
      detail += " " + detail::num(rows[k].final_misfit, 3);
      if (!(rows.back().final_misfit < rows[k].final_misfit))
        ok = false;
    }
    detail += ", exact data " + detail::num(rows.back().final_misfit, 3);
    r.passed = ok;
    r.detail = detail;
  });
}

namespace detail {

inline std::string slurp(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

} // namespace detail

/// Two runs of one config and seed into separate directories; every CSV must
/// match byte for byte and report.json must match once wall time is removed.
inline CheckResult determinism(Audit& audit, const std::filesystem::path& scratch)
{
  return detail::timed(9, "determinism", [&](CheckResult& r) {
    auto cfg = reference_config();
    cfg.nx = cfg.ny = 32;
    std::vector<std::filesystem::path> dirs{scratch / "det_a", scratch / "det_b"};
    for (const auto& d : dirs) {
      std::filesystem::remove_all(d);
      cfg.out_dir = d.string();
      audit.add(run_experiment(cfg, true).report, cfg.phantom.box);
    }
    bool same = true;
    for (const char* f : {"u_true.csv", "u_rec.csv", "phi.csv", "psi1.csv", "psi2.csv", "data.csv"})
      same = same && detail::slurp(dirs[0] / f) == detail::slurp(dirs[1] / f);
    auto strip = [](const std::filesystem::path& p) {
      auto j = nlohmann::ordered_json::parse(detail::slurp(p));
      j.erase("wall_time_s");
      return j.dump();
    };
    bool report_same = strip(dirs[0] / "report.json") == strip(dirs[1] / "report.json");
    r.passed = same && report_same;
    r.detail = std::string("fields ") + (same ? "identical" : "differ") + ", report " +
               (report_same ? "identical" : "differs");
  });
}

inline CheckResult admissibility(const Audit& audit)
{
  return detail::timed(10, "admissibility", [&](CheckResult& r) {
    r.passed = audit.records > 0 && audit.violations == 0;
    r.detail = std::to_string(audit.violations) + " violations over " +
               std::to_string(audit.records) + " recorded iterates";
  });
}

/// Runs every check in order. `scratch` receives the determinism artifacts.
inline std::vector<CheckResult> run_all(const std::filesystem::path& scratch,
                                        const std::function<void(const CheckResult&)>& on_result = {})
{
  Audit audit;
  std::vector<CheckResult> out;
  auto push = [&](CheckResult r) {
    if (on_result)
      on_result(r);
    out.push_back(std::move(r));
  };
  push(solver_order());
  push(adjoint_identity());
  push(gradient_fidelity());
  push(heaviside_smoothing());
  push(perimeter_recovery());
  push(monotone_descent(audit));
  push(end_to_end(audit));
  push(stability_sweep(audit));
  push(determinism(audit, scratch));
  push(admissibility(audit));
  return out;
}

} // namespace lsreg::checks
