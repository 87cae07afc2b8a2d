#pragma once

#include <cstdint>
#include <random>

#include "lsreg/grid.hpp"

namespace lsreg {

struct NoiseSpec
{
  double delta_rel = 0.0;
  std::uint64_t seed = 42;
};

struct NoisyData
{
  BoundaryTrace y_delta;
  double delta_abs = 0.0;
};

/// y_delta = y + delta_rel ||y|| xi / ||xi|| with xi seeded standard normal,
/// so ||y_delta - y|| equals delta_rel ||y|| in the ring L2 norm.
inline NoisyData add_noise(const BoundaryTrace& y, const NoiseSpec& spec)
{
  require(spec.delta_rel >= 0.0, "noise level must be non-negative");
  if (spec.delta_rel == 0.0)
    return {y, 0.0};
  const double ynorm = l2_norm(y);
  require(ynorm > 0.0, "cannot scale relative noise on zero data");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  BoundaryTrace xi(y.grid());
  for (std::size_t k = 0; k < xi.size(); ++k)
    xi[k] = normal(rng);

  const double delta_abs = spec.delta_rel * ynorm;
  return {y + xi * (delta_abs / l2_norm(xi)), delta_abs};
}

} // namespace lsreg
