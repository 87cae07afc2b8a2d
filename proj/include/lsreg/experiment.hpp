#pragma once

// End-to-end experiment plumbing: phantom, synthetic data, noise, inversion
// and the artifacts written to out.dir.

#include <future>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsreg/config.hpp"
#include "lsreg/io.hpp"

namespace lsreg {

inline BoundaryTrace excitation_trace(const Grid2D& g, const std::string& kind)
{
  return boundary_trace(ScalarField::sample(g, [&](double x, double y) {
    if (kind == "y")
      return y;
    if (kind == "xy")
      return x + y;
    return x;
  }));
}

inline Problem make_problem(const ExperimentConfig& cfg)
{
  const Grid2D g = cfg.grid();
  if (cfg.kind == ProblemKind::Potential)
    return PotentialProblem(ScalarField(g, cfg.sigma), BoundaryTrace(g), cfg.solver);
  return ConductivityProblem(ScalarField(g, cfg.source), excitation_trace(g, cfg.excitation),
                             cfg.phantom.box, cfg.solver, cfg.f2_literal_trace);
}

struct ExperimentResult
{
  Phantom phantom;
  BoundaryTrace clean;
  NoisyData data;
  PriorData prior;
  RunReport report;
};

inline nlohmann::ordered_json config_json(const ExperimentConfig& cfg)
{
  const auto& inv = cfg.inversion;
  nlohmann::ordered_json j;
  j["grid.nx"] = cfg.nx;
  j["grid.ny"] = cfg.ny;
  j["problem.kind"] = to_string(cfg.kind);
  j["problem.f2_literal_trace"] = cfg.f2_literal_trace;
  j["problem.sigma"] = cfg.sigma;
  j["problem.source"] = cfg.source;
  j["problem.excitation"] = cfg.excitation;
  j["phantom.shape"] = std::visit(
    [](const auto& s) -> std::string {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, Disk>)
        return "disk";
      else if constexpr (std::is_same_v<T, TwoDisks>)
        return "two_disks";
      else
        return "square";
    },
    cfg.phantom.shape);
  j["phantom.psi1"] = detail::law_text(cfg.phantom.psi1);
  j["phantom.psi2"] = detail::law_text(cfg.phantom.psi2);
  j["phantom.box"] = {cfg.phantom.box.m, cfg.phantom.box.M};
  j["noise.delta_rel"] = cfg.noise.delta_rel;
  j["noise.seed"] = cfg.noise.seed;
  j["reg.alpha"] = inv.alpha;
  if (inv.alpha_rule) {
    j["reg.alpha_rule.c"] = inv.alpha_rule->c;
    j["reg.alpha_rule.p"] = inv.alpha_rule->p;
  }
  j["reg.beta1"] = inv.betas.shape_tv;
  j["reg.beta2"] = inv.betas.phi_h1;
  j["reg.beta3"] = inv.betas.levels_tv;
  j["reg.eps0"] = inv.eps0;
  j["reg.eps_decay"] = inv.eps_decay;
  j["reg.beta_tv"] = inv.beta_tv;
  j["update.scheme"] = to_string(inv.scheme);
  j["update.sign_flip"] = inv.flip();
  j["update.backtracking"] = inv.backtracking;
  j["update.adjoint"] = inv.adjoint_mode == AdjointMode::DiscreteAdjoint ? "discrete" : "continuous";
  j["stop.tau"] = inv.tau;
  j["stop.max_iters"] = inv.max_iters;
  j["solver.method"] = cfg.solver.method == SolverMethod::ConjugateGradient ? "cg" : "direct";
  j["solver.rel_tol"] = cfg.solver.rel_tol;
  j["solver.max_iters"] = cfg.solver.max_iters;
  return j;
}

inline nlohmann::ordered_json report_json(const ExperimentConfig& cfg, const RunReport& r)
{
  nlohmann::ordered_json j;
  j["config"] = config_json(cfg);
  j["alpha"] = r.alpha;
  j["delta_abs"] = r.delta_abs;
  j["stop_reason"] = to_string(r.stop_reason);
  auto& iters = j["iterations"] = nlohmann::ordered_json::array();
  for (const auto& rec : r.history) {
    nlohmann::ordered_json it;
    it["iteration"] = rec.iteration;
    it["misfit"] = rec.misfit;
    it["residual_norm"] = rec.residual_norm;
    it["shape_tv"] = rec.penalties.shape_tv;
    it["phi_h1"] = rec.penalties.phi_h1;
    it["levels_tv"] = rec.penalties.levels_tv;
    it["total"] = rec.total;
    it["step"] = rec.step;
    it["halvings"] = rec.halvings;
    it["eps"] = rec.eps;
    if (rec.l1_error)
      it["l1_error"] = *rec.l1_error;
    iters.push_back(std::move(it));
  }
  j["wall_time_s"] = r.wall_time_s;
  return j;
}

/// Synthesises data for the configured phantom and runs the inversion.
/// With `write` the artifacts land in cfg.out_dir.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write = true)
{
  const Grid2D g = cfg.grid();
  Problem prob = make_problem(cfg);
  ExperimentResult res;
  res.phantom = make_phantom(cfg.phantom, g);
  res.clean = forward(prob, res.phantom.u_true).y;
  res.data = add_noise(res.clean, cfg.noise);
  res.prior = default_prior(g, cfg.phantom.box);
  res.report = run_inversion(prob, res.data.y_delta, res.data.delta_abs, res.prior, cfg.inversion,
                             res.phantom.u_true);
  if (write) {
    namespace fs = std::filesystem;
    const fs::path dir = cfg.out_dir;
    const auto& s = res.report.final_state;
    save_field(dir / "u_true.csv", res.phantom.u_true);
    save_field(dir / "u_rec.csv", project(s));
    save_field(dir / "phi.csv", s.phi);
    save_field(dir / "psi1.csv", s.psi1);
    save_field(dir / "psi2.csv", s.psi2);
    save_trace(dir / "data.csv", res.data.y_delta);
    save_text(dir / "report.json", report_json(cfg, res.report).dump(2) + "\n");
  }
  return res;
}

inline ExperimentResult run_experiment(const std::filesystem::path& config_path, bool write = true)
{
  return run_experiment(load_config(config_path), write);
}

struct SweepRow
{
  double delta_rel = 0.0;
  double alpha = 0.0;
  double final_misfit = 0.0;
  double l1_error_u = 0.0;
  int iterations = 0;
  std::string stop_reason;
  std::string error; ///< non-empty when the run failed
};

/// One experiment per noise level, each in its own subdirectory of out.dir
/// when `write` is set. Failed runs are recorded and the sweep continues.
inline std::vector<SweepRow> sweep_noise(const ExperimentConfig& base,
                                         const std::vector<double>& deltas, bool parallel = false,
                                         bool write = true)
{
  require(!deltas.empty(), "sweep needs at least one noise level");
  for (std::size_t k = 1; k < deltas.size(); ++k)
    require(deltas[k] < deltas[k - 1], "sweep noise levels must be strictly descending");

  auto run_one = [&base, write](std::size_t k, double delta) {
    SweepRow row;
    row.delta_rel = delta;
    try {
      ExperimentConfig cfg = base;
      cfg.noise.delta_rel = delta;
      cfg.out_dir = (std::filesystem::path(base.out_dir) / ("run_" + std::to_string(k))).string();
      auto res = run_experiment(cfg, write);
      const auto& last = res.report.history.back();
      row.alpha = res.report.alpha;
      row.final_misfit = last.misfit;
      row.l1_error_u = last.l1_error.value_or(0.0);
      row.iterations = last.iteration;
      row.stop_reason = to_string(res.report.stop_reason);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    return row;
  };

  std::vector<SweepRow> rows;
  if (parallel) {
    std::vector<std::future<SweepRow>> jobs;
    for (std::size_t k = 0; k < deltas.size(); ++k)
      jobs.push_back(std::async(std::launch::async, run_one, k, deltas[k]));
    for (auto& j : jobs)
      rows.push_back(j.get());
  } else {
    for (std::size_t k = 0; k < deltas.size(); ++k)
      rows.push_back(run_one(k, deltas[k]));
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows)
{
  std::string out = "delta,alpha,final_misfit,l1_error_u,iterations,stop_reason,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    for (char& c : err)
      if (c == ',' || c == '\n')
        c = ';';
    out += detail::fmt17(r.delta_rel) + "," + detail::fmt17(r.alpha) + "," +
           detail::fmt17(r.final_misfit) + "," + detail::fmt17(r.l1_error_u) + "," +
           std::to_string(r.iterations) + "," + r.stop_reason + "," + err + "\n";
  }
  return out;
}

} // namespace lsreg
