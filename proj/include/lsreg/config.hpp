#pragma once

// Experiment configuration: flat `key = value` lines, `#` starts a comment.
//
//   grid.nx = 64
//   problem.kind = potential          # or conductivity
//   phantom.psi1 = ramp_x 2 3
//   reg.alpha_rule.c = 0.1
//
// Every error names the offending line.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lsreg/inversion.hpp"
#include "lsreg/noise.hpp"
#include "lsreg/phantom.hpp"

namespace lsreg {

enum class ProblemKind { Potential, Conductivity };

struct ExperimentConfig
{
  int nx = 64;
  int ny = 64;
  ProblemKind kind = ProblemKind::Potential;
  bool f2_literal_trace = false;
  double sigma = 1.0;      ///< potential problem: constant conductivity
  double source = 0.0;     ///< conductivity problem: constant f
  std::string excitation = "x"; ///< conductivity problem: g = x, y or x+y on the ring
  PhantomSpec phantom;
  NoiseSpec noise;
  InversionConfig inversion;
  SolverSettings solver;
  std::string out_dir = "out";

  Grid2D grid() const { return Grid2D(nx, ny); }
};

namespace detail {

inline std::string trim(const std::string& s)
{
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> words(const std::string& s)
{
  std::vector<std::string> out;
  std::string w;
  std::stringstream ss(s);
  while (ss >> w) {
    if (!w.empty() && w.back() == ',')
      w.pop_back();
    if (!w.empty())
      out.push_back(w);
  }
  return out;
}

inline double to_double(const std::string& s, int line)
{
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError(line, "expected a number, got '" + s + "'");
  return v;
}

inline long long to_integer(const std::string& s, int line)
{
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError(line, "expected an integer, got '" + s + "'");
  return v;
}

inline bool to_bool(const std::string& s, int line)
{
  if (s == "true" || s == "on" || s == "1" || s == "yes")
    return true;
  if (s == "false" || s == "off" || s == "0" || s == "no")
    return false;
  throw ConfigError(line, "expected a boolean, got '" + s + "'");
}

inline std::vector<double> numbers(const std::string& s, std::size_t count, int line)
{
  auto w = words(s);
  if (w.size() != count)
    throw ConfigError(line, "expected " + std::to_string(count) + " numbers, got '" + s + "'");
  std::vector<double> out;
  for (const auto& x : w)
    out.push_back(to_double(x, line));
  return out;
}

inline Law to_law(const std::string& s, int line)
{
  auto w = words(s);
  if (w.empty())
    throw ConfigError(line, "empty law");
  auto arg = [&](std::size_t n) {
    if (w.size() != n + 1)
      throw ConfigError(line, "law '" + w[0] + "' takes " + std::to_string(n) + " values");
    std::vector<double> v;
    for (std::size_t k = 1; k <= n; ++k)
      v.push_back(to_double(w[k], line));
    return v;
  };
  if (w[0] == "constant")
    return Law::constant(arg(1)[0]);
  if (w[0] == "ramp_x") {
    auto v = arg(2);
    return Law::ramp_x(v[0], v[1]);
  }
  if (w[0] == "ramp_y") {
    auto v = arg(2);
    return Law::ramp_y(v[0], v[1]);
  }
  if (w[0] == "radial") {
    auto v = arg(2);
    return Law::radial(v[0], v[1]);
  }
  throw ConfigError(line, "unknown law '" + w[0] + "'");
}

inline std::string law_text(const Law& l)
{
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  switch (l.kind) {
  case Law::Kind::Constant:
    return "constant " + num(l.a);
  case Law::Kind::RampX:
    return "ramp_x " + num(l.a) + " " + num(l.b);
  case Law::Kind::RampY:
    return "ramp_y " + num(l.a) + " " + num(l.b);
  case Law::Kind::Radial:
    return "radial " + num(l.a) + " " + num(l.b);
  }
  return "?";
}

} // namespace detail

inline const char* to_string(ProblemKind k)
{
  return k == ProblemKind::Potential ? "potential" : "conductivity";
}

inline const char* to_string(UpdateScheme s)
{
  return s == UpdateScheme::Explicit ? "explicit" : "semi_implicit";
}

/// Parses a configuration text; errors carry the 1-based line number.
inline ExperimentConfig parse_config(std::istream& in)
{
  ExperimentConfig cfg;
  // Shape parameters are collected first and combined once the shape kind
  // is known.
  std::string shape = "disk";
  std::vector<double> center{0.5, 0.5}, center2{0.7, 0.7};
  double radius = 0.3, radius2 = 0.1, half = 0.2;
  std::map<std::string, int> seen;

  using Setter = std::function<void(const std::string&, int)>;
  using namespace detail;
  auto& inv = cfg.inversion;
  auto rule = [&]() -> AlphaRule& {
    if (!inv.alpha_rule)
      inv.alpha_rule = AlphaRule{};
    return *inv.alpha_rule;
  };
  const std::map<std::string, Setter> setters = {
    {"grid.nx", [&](auto& v, int l) { cfg.nx = static_cast<int>(to_integer(v, l)); }},
    {"grid.ny", [&](auto& v, int l) { cfg.ny = static_cast<int>(to_integer(v, l)); }},
    {"problem.kind",
     [&](auto& v, int l) {
       if (v == "potential")
         cfg.kind = ProblemKind::Potential;
       else if (v == "conductivity")
         cfg.kind = ProblemKind::Conductivity;
       else
         throw ConfigError(l, "problem.kind must be potential or conductivity");
     }},
    {"problem.f2_literal_trace", [&](auto& v, int l) { cfg.f2_literal_trace = to_bool(v, l); }},
    {"problem.sigma", [&](auto& v, int l) { cfg.sigma = to_double(v, l); }},
    {"problem.source", [&](auto& v, int l) { cfg.source = to_double(v, l); }},
    {"problem.excitation",
     [&](auto& v, int l) {
       if (v != "x" && v != "y" && v != "xy")
         throw ConfigError(l, "problem.excitation must be x, y or xy");
       cfg.excitation = v;
     }},
    {"phantom.shape",
     [&](auto& v, int l) {
       if (v != "disk" && v != "two_disks" && v != "square")
         throw ConfigError(l, "phantom.shape must be disk, two_disks or square");
       shape = v;
     }},
    {"phantom.center", [&](auto& v, int l) { center = numbers(v, 2, l); }},
    {"phantom.radius", [&](auto& v, int l) { radius = to_double(v, l); }},
    {"phantom.center2", [&](auto& v, int l) { center2 = numbers(v, 2, l); }},
    {"phantom.radius2", [&](auto& v, int l) { radius2 = to_double(v, l); }},
    {"phantom.half", [&](auto& v, int l) { half = to_double(v, l); }},
    {"phantom.psi1", [&](auto& v, int l) { cfg.phantom.psi1 = to_law(v, l); }},
    {"phantom.psi2", [&](auto& v, int l) { cfg.phantom.psi2 = to_law(v, l); }},
    {"phantom.box",
     [&](auto& v, int l) {
       auto b = numbers(v, 2, l);
       if (!(b[0] < b[1]))
         throw ConfigError(l, "phantom.box needs m < M");
       cfg.phantom.box = AdmissibleBox(b[0], b[1]);
     }},
    {"noise.delta_rel", [&](auto& v, int l) { cfg.noise.delta_rel = to_double(v, l); }},
    {"noise.seed",
     [&](auto& v, int l) {
       auto s = to_integer(v, l);
       if (s < 0)
         throw ConfigError(l, "noise.seed must be non-negative");
       cfg.noise.seed = static_cast<std::uint64_t>(s);
     }},
    {"reg.alpha", [&](auto& v, int l) { inv.alpha = to_double(v, l); }},
    {"reg.alpha_rule.c", [&](auto& v, int l) { rule().c = to_double(v, l); }},
    {"reg.alpha_rule.p", [&](auto& v, int l) { rule().p = to_double(v, l); }},
    {"reg.beta1", [&](auto& v, int l) { inv.betas.shape_tv = to_double(v, l); }},
    {"reg.beta2", [&](auto& v, int l) { inv.betas.phi_h1 = to_double(v, l); }},
    {"reg.beta3", [&](auto& v, int l) { inv.betas.levels_tv = to_double(v, l); }},
    {"reg.eps0", [&](auto& v, int l) { inv.eps0 = to_double(v, l); }},
    {"reg.eps_decay", [&](auto& v, int l) { inv.eps_decay = to_double(v, l); }},
    {"reg.beta_tv", [&](auto& v, int l) { inv.beta_tv = to_double(v, l); }},
    {"update.scheme",
     [&](auto& v, int l) {
       if (v == "explicit")
         inv.scheme = UpdateScheme::Explicit;
       else if (v == "semi_implicit")
         inv.scheme = UpdateScheme::SemiImplicit;
       else
         throw ConfigError(l, "update.scheme must be explicit or semi_implicit");
     }},
    {"update.sign_flip",
     [&](auto& v, int l) {
       if (v == "auto")
         inv.sign_flip.reset();
       else
         inv.sign_flip = to_bool(v, l);
     }},
    {"update.backtracking", [&](auto& v, int l) { inv.backtracking = to_bool(v, l); }},
    {"update.adjoint",
     [&](auto& v, int l) {
       if (v == "discrete")
         inv.adjoint_mode = AdjointMode::DiscreteAdjoint;
       else if (v == "continuous")
         inv.adjoint_mode = AdjointMode::Continuous;
       else
         throw ConfigError(l, "update.adjoint must be discrete or continuous");
     }},
    {"stop.tau", [&](auto& v, int l) { inv.tau = to_double(v, l); }},
    {"stop.max_iters",
     [&](auto& v, int l) { inv.max_iters = static_cast<int>(to_integer(v, l)); }},
    {"solver.method",
     [&](auto& v, int l) {
       if (v == "cg")
         cfg.solver.method = SolverMethod::ConjugateGradient;
       else if (v == "direct")
         cfg.solver.method = SolverMethod::Direct;
       else
         throw ConfigError(l, "solver.method must be cg or direct");
     }},
    {"solver.rel_tol", [&](auto& v, int l) { cfg.solver.rel_tol = to_double(v, l); }},
    {"solver.max_iters",
     [&](auto& v, int l) { cfg.solver.max_iters = static_cast<int>(to_integer(v, l)); }},
    {"out.dir", [&](auto& v, int) { cfg.out_dir = v; }},
  };

  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty())
      continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(lineno, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError(lineno, "unknown key '" + key + "'");
    if (auto prev = seen.find(key); prev != seen.end())
      throw ConfigError(lineno, "duplicate key '" + key + "' (first set on line " +
                                  std::to_string(prev->second) + ")");
    if (value.empty())
      throw ConfigError(lineno, "missing value for '" + key + "'");
    seen[key] = lineno;
    it->second(value, lineno);
  }

  auto line_of = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (auto it = seen.find(k); it != seen.end())
        return it->second;
    return 0;
  };
  auto check = [&](bool ok, std::initializer_list<const char*> keys, const std::string& msg) {
    if (!ok)
      throw ConfigError(line_of(keys), msg);
  };

  if (shape == "disk")
    cfg.phantom.shape = Disk{center[0], center[1], radius};
  else if (shape == "two_disks")
    cfg.phantom.shape = TwoDisks{{center[0], center[1], radius}, {center2[0], center2[1], radius2}};
  else
    cfg.phantom.shape = Square{center[0], center[1], half};
  inv.box = cfg.phantom.box;

  check(cfg.nx >= 3 && cfg.ny >= 3, {"grid.nx", "grid.ny"}, "grid needs at least 3 nodes per axis");
  check(cfg.sigma > 0.0, {"problem.sigma"}, "problem.sigma must be positive");
  check(cfg.kind == ProblemKind::Potential || cfg.phantom.box.m > 0.0,
        {"phantom.box", "problem.kind"}, "conductivity needs a box with m > 0");
  check(cfg.noise.delta_rel >= 0.0, {"noise.delta_rel"}, "noise.delta_rel must be non-negative");
  try {
    validate(cfg.phantom, cfg.grid());
  } catch (const InvalidArgument& e) {
    throw ConfigError(line_of({"phantom.shape", "phantom.center", "phantom.radius", "phantom.psi1",
                               "phantom.psi2", "phantom.box"}),
                      e.what());
  }
  // Validation messages name their key; report the line that set it.
  auto validated = [&](auto&& fn) {
    try {
      fn();
    } catch (const InvalidArgument& e) {
      std::string msg = e.what();
      int line = 0;
      std::size_t best = 0;
      for (const auto& [k, l] : seen)
        if (msg.find(k) != std::string::npos && k.size() > best) {
          best = k.size();
          line = l;
        }
      throw ConfigError(line, msg);
    }
  };
  validated([&] { inv.validate(); });
  validated([&] {
    require(cfg.solver.rel_tol > 0.0, "solver.rel_tol must be positive");
    require(cfg.solver.max_iters > 0, "solver.max_iters must be positive");
  });
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text)
{
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config " + path.string());
  return parse_config(in);
}

} // namespace lsreg
