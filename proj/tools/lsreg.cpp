// lsreg: phantom generation, synthetic data, inversion runs, noise sweeps
// and the acceptance checks from the command line.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lsreg/checks.hpp"

namespace fs = std::filesystem;
using namespace lsreg;

namespace {

ExperimentConfig load(const std::string& path, const std::string& out)
{
  ExperimentConfig cfg = path.empty() ? ExperimentConfig{} : load_config(path);
  if (!out.empty())
    cfg.out_dir = out;
  return cfg;
}

std::vector<double> parse_deltas(const std::string& text)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw InvalidArgument("bad noise level '" + cell + "'");
    }
  }
  return out;
}

int cmd_phantom(const ExperimentConfig& cfg)
{
  const fs::path dir = cfg.out_dir;
  auto ph = make_phantom(cfg.phantom, cfg.grid());
  save_field(dir / "u_true.csv", ph.u_true);
  save_field(dir / "phi_true.csv", ph.state_true.phi);
  save_field(dir / "psi1_true.csv", ph.state_true.psi1);
  save_field(dir / "psi2_true.csv", ph.state_true.psi2);
  std::printf("phantom written to %s (u in [%g, %g])\n", dir.c_str(), ph.u_true.min(),
              ph.u_true.max());
  return 0;
}

int cmd_forward(const ExperimentConfig& cfg)
{
  const fs::path dir = cfg.out_dir;
  auto ph = make_phantom(cfg.phantom, cfg.grid());
  auto y = forward(make_problem(cfg), ph.u_true).y;
  save_trace(dir / "data_clean.csv", y);
  std::printf("clean data written to %s (norm %.6g)\n", (dir / "data_clean.csv").c_str(),
              l2_norm(y));
  return 0;
}

int cmd_invert(const ExperimentConfig& cfg)
{
  auto res = run_experiment(cfg, true);
  const auto& last = res.report.history.back();
  std::printf("stop %s after %d iterations, residual %.6g (tau*delta %.6g), L1 error %.6g -> %.6g\n",
              to_string(res.report.stop_reason), last.iteration, last.residual_norm,
              cfg.inversion.tau * res.data.delta_abs, res.report.history.front().l1_error.value_or(0),
              last.l1_error.value_or(0));
  std::printf("artifacts in %s\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& deltas, bool parallel)
{
  auto rows = sweep_noise(cfg, parse_deltas(deltas), parallel, true);
  std::string table = sweep_csv(rows);
  save_text(fs::path(cfg.out_dir) / "sweep.csv", table);
  std::fputs(table.c_str(), stdout);
  for (const auto& r : rows)
    if (!r.error.empty())
      std::fprintf(stderr, "run at delta %g failed: %s\n", r.delta_rel, r.error.c_str());
  return 0;
}

int cmd_check(const std::string& scratch)
{
  int failed = 0;
  checks::run_all(scratch.empty() ? fs::temp_directory_path() / "lsreg_check" : fs::path(scratch),
                  [&](const checks::CheckResult& r) {
                    std::printf("%s\n", checks::format_line(r).c_str());
                    std::fflush(stdout);
                    failed += r.passed ? 0 : 1;
                  });
  std::printf("%d of 10 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Level-set reconstruction of piecewise non-constant coefficients"};
  app.require_subcommand(1);

  std::string config, out, deltas = "0.04,0.02,0.01,0", scratch;
  bool parallel = false;
  auto with_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config, "configuration file")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out, "output directory (overrides out.dir)");
  };

  auto* phantom = app.add_subcommand("phantom", "write the true coefficient and level-set state");
  auto* fwd = app.add_subcommand("forward", "write clean boundary data for the phantom");
  auto* invert = app.add_subcommand("invert", "synthesise noisy data and run the inversion");
  auto* sweep = app.add_subcommand("sweep", "run the inversion for several noise levels");
  auto* check = app.add_subcommand("check", "run the acceptance checks");
  for (auto* sub : {phantom, fwd, invert, sweep})
    with_config(sub);
  sweep->add_option("--deltas", deltas, "comma-separated relative noise levels, descending");
  sweep->add_flag("--parallel", parallel, "run the noise levels concurrently");
  check->add_option("--scratch", scratch, "directory for temporary artifacts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed())
      return cmd_check(scratch);
    auto cfg = load(config, out);
    if (phantom->parsed())
      return cmd_phantom(cfg);
    if (fwd->parsed())
      return cmd_forward(cfg);
    if (invert->parsed())
      return cmd_invert(cfg);
    return cmd_sweep(cfg, deltas, parallel);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ErrorCategory::Io);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
