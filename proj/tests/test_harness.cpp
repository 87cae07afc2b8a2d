#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "lsreg/experiment.hpp"

using namespace lsreg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
  auto dir = fs::temp_directory_path() / "lsreg_tests" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int config_error_line(const std::string& text)
{
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

ExperimentConfig tiny_config(const fs::path& out)
{
  ExperimentConfig cfg;
  cfg.nx = cfg.ny = 16;
  cfg.noise.delta_rel = 0.01;
  cfg.inversion.alpha = 1e-2;
  cfg.inversion.max_iters = 0;
  cfg.out_dir = out.string();
  return cfg;
}

} // namespace

TEST(Phantom, DiskAreaAndValues)
{
  Grid2D g = Grid2D::unit_square(64);
  PhantomSpec spec;
  auto ph = make_phantom(spec, g);
  double area = norm(heaviside(ph.state_true.phi), NormKind::L1);
  EXPECT_NEAR(area, std::numbers::pi * 0.09, 2 * std::numbers::pi * 0.3 * g.hx());
  EXPECT_DOUBLE_EQ(ph.u_true(32, 32), ph.state_true.psi1(32, 32));
  EXPECT_DOUBLE_EQ(ph.u_true(0, 0), ph.state_true.psi2(0, 0));
  EXPECT_GE(ph.u_true.min(), spec.box.m);
  EXPECT_LE(ph.u_true.max(), spec.box.M);
}

TEST(Phantom, InvalidSpecs)
{
  Grid2D g = Grid2D::unit_square(32);
  PhantomSpec outside;
  outside.shape = Disk{0.9, 0.5, 0.3};
  EXPECT_THROW(make_phantom(outside, g), InvalidArgument);
  PhantomSpec law;
  law.psi1 = Law::constant(4.0);
  EXPECT_THROW(make_phantom(law, g), InvalidArgument);
  PhantomSpec square;
  square.shape = Square{0.5, 0.5, 0.0};
  EXPECT_THROW(make_phantom(square, g), InvalidArgument);
}

TEST(Noise, ExactScaleAndDeterminism)
{
  Grid2D g = Grid2D::unit_square(32);
  auto y = boundary_trace(ScalarField::sample(g, [](double x, double y) { return x + y * y; }));
  auto clean = add_noise(y, {0.0, 1});
  EXPECT_EQ(clean.y_delta, y);
  EXPECT_EQ(clean.delta_abs, 0.0);

  auto a = add_noise(y, {0.03, 7});
  EXPECT_NEAR(l2_norm(a.y_delta - y) / l2_norm(y), 0.03, 1e-12);
  EXPECT_NEAR(a.delta_abs, 0.03 * l2_norm(y), 1e-14);
  EXPECT_EQ(add_noise(y, {0.03, 7}).y_delta, a.y_delta);
  EXPECT_NE(add_noise(y, {0.03, 8}).y_delta, a.y_delta);

  EXPECT_THROW(add_noise(BoundaryTrace(g), {0.01, 1}), InvalidArgument);
  EXPECT_THROW(add_noise(y, {-0.01, 1}), InvalidArgument);
}

TEST(Io, RoundTripIsExact)
{
  Grid2D g(9, 7, 0.0, 2.0, -1.0, 0.5);
  auto f = ScalarField::sample(g, [](double x, double y) { return std::sin(3 * x) / 7 + y; });
  auto t = boundary_trace(f);
  auto dir = scratch("io");
  save_field(dir / "f.csv", f);
  save_trace(dir / "t.csv", t);
  EXPECT_EQ(load_field(dir / "f.csv", g), f);
  EXPECT_EQ(load_trace(dir / "t.csv", g), t);
  EXPECT_THROW(load_field(dir / "f.csv", Grid2D(5, 5)), IoError);
  EXPECT_THROW(load_field(dir / "missing.csv", g), IoError);
}

TEST(Config, ParsesKeysAndComments)
{
  auto cfg = parse_config("# comment\n"
                          "grid.nx = 40\n"
                          "grid.ny = 30   # trailing\n"
                          "problem.kind = conductivity\n"
                          "phantom.shape = square\n"
                          "phantom.half = 0.15\n"
                          "phantom.psi1 = ramp_y 2 3\n"
                          "update.scheme = semi_implicit\n"
                          "update.sign_flip = true\n"
                          "reg.alpha_rule.c = 0.2\n"
                          "solver.method = direct\n"
                          "\n"
                          "out.dir = somewhere\n");
  EXPECT_EQ(cfg.nx, 40);
  EXPECT_EQ(cfg.ny, 30);
  EXPECT_EQ(cfg.kind, ProblemKind::Conductivity);
  ASSERT_TRUE(std::holds_alternative<Square>(cfg.phantom.shape));
  EXPECT_DOUBLE_EQ(std::get<Square>(cfg.phantom.shape).half, 0.15);
  EXPECT_EQ(cfg.phantom.psi1.kind, Law::Kind::RampY);
  EXPECT_EQ(cfg.inversion.scheme, UpdateScheme::SemiImplicit);
  EXPECT_EQ(cfg.inversion.sign_flip, std::optional<bool>(true));
  ASSERT_TRUE(cfg.inversion.alpha_rule.has_value());
  EXPECT_DOUBLE_EQ(cfg.inversion.alpha_rule->c, 0.2);
  EXPECT_EQ(cfg.solver.method, SolverMethod::Direct);
  EXPECT_EQ(cfg.out_dir, "somewhere");
}

TEST(Config, ErrorsCarryLineNumbers)
{
  EXPECT_EQ(config_error_line("grid.nx = 10\nbogus.key = 1\n"), 2);
  EXPECT_EQ(config_error_line("grid.nx = ten\n"), 1);
  EXPECT_EQ(config_error_line("grid.nx = 10\n# c\ngrid.nx = 12\n"), 3);
  EXPECT_EQ(config_error_line("grid.nx = 10\nstop.tau = 0.5\n"), 2);
  EXPECT_EQ(config_error_line("noise.delta_rel = 0.1\nphantom.shape = hexagon\n"), 2);
  EXPECT_EQ(config_error_line("just words\n"), 1);
  EXPECT_THROW(load_config("/nonexistent/lsreg.cfg"), Error);
}

TEST(Config, ShippedConfigsLoad)
{
  for (const char* name : {"reference.cfg", "conductivity.cfg"}) {
    fs::path p = fs::path(LSREG_SOURCE_DIR) / "configs" / name;
    EXPECT_NO_THROW(load_config(p)) << p;
  }
}

TEST(Experiment, WritesArtifactsAndIsReproducible)
{
  auto dir = scratch("experiment");
  auto cfg = tiny_config(dir / "a");
  auto res = run_experiment(cfg, true);
  ASSERT_EQ(res.report.history.size(), 1u);
  for (const char* f : {"u_true.csv", "u_rec.csv", "phi.csv", "psi1.csv", "psi2.csv", "data.csv",
                        "report.json"})
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  auto j = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
  EXPECT_EQ(j["iterations"].size(), 1u);
  EXPECT_EQ(j["stop_reason"], "MaxIters");

  cfg.out_dir = (dir / "b").string();
  run_experiment(cfg, true);
  for (const char* f : {"u_rec.csv", "phi.csv", "data.csv"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(Experiment, SweepRowsAndFailures)
{
  auto dir = scratch("sweep");
  auto cfg = tiny_config(dir);
  auto rows = sweep_noise(cfg, {0.02}, false, true);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0].error.empty());
  EXPECT_TRUE(fs::exists(dir / "run_0" / "report.json"));
  EXPECT_THROW(sweep_noise(cfg, {0.01, 0.02}, false, false), InvalidArgument);

  cfg.inversion.tau = 0.5;
  auto bad = sweep_noise(cfg, {0.02, 0.01}, true, false);
  ASSERT_EQ(bad.size(), 2u);
  for (const auto& r : bad)
    EXPECT_FALSE(r.error.empty());
  auto table = sweep_csv(bad);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
}
