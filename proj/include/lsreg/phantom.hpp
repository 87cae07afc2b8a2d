#pragma once

#include <cmath>
#include <variant>

#include "lsreg/levelset.hpp"

namespace lsreg {

struct Disk
{
  double cx = 0.5, cy = 0.5, radius = 0.3;
};

struct TwoDisks
{
  Disk first;
  Disk second;
};

/// Axis-aligned square given by centre and half side.
struct Square
{
  double cx = 0.5, cy = 0.5, half = 0.2;
};

using Shape = std::variant<Disk, TwoDisks, Square>;

/// A phase value law; `a`, `b` are the values at the two ends of the ramp
/// (or the centre and the farthest corner for Radial).
struct Law
{
  enum class Kind { Constant, RampX, RampY, Radial };
  Kind kind = Kind::Constant;
  double a = 1.0;
  double b = 1.0;

  static Law constant(double c) { return {Kind::Constant, c, c}; }
  static Law ramp_x(double a, double b) { return {Kind::RampX, a, b}; }
  static Law ramp_y(double a, double b) { return {Kind::RampY, a, b}; }
  static Law radial(double a, double b) { return {Kind::Radial, a, b}; }

  double lo() const { return std::min(a, b); }
  double hi() const { return std::max(a, b); }
};

struct PhantomSpec
{
  Shape shape = Disk{};
  Law psi1 = Law::ramp_x(2.0, 3.0);
  Law psi2 = Law::ramp_y(1.0, 1.5);
  AdmissibleBox box{0.5, 3.5};
};

struct Phantom
{
  ScalarField u_true;
  LevelSetState state_true;
};

inline ScalarField sample_law(const Law& law, const Grid2D& g)
{
  const double cx = 0.5 * (g.x0 + g.x1), cy = 0.5 * (g.y0 + g.y1);
  const double rmax = std::hypot(0.5 * (g.x1 - g.x0), 0.5 * (g.y1 - g.y0));
  return ScalarField::sample(g, [&](double x, double y) {
    switch (law.kind) {
    case Law::Kind::Constant:
      return law.a;
    case Law::Kind::RampX:
      return law.a + (law.b - law.a) * (x - g.x0) / (g.x1 - g.x0);
    case Law::Kind::RampY:
      return law.a + (law.b - law.a) * (y - g.y0) / (g.y1 - g.y0);
    case Law::Kind::Radial:
      return law.a + (law.b - law.a) * std::hypot(x - cx, y - cy) / rmax;
    }
    return law.a;
  });
}

namespace detail {

inline double disk_distance(const Disk& d, double x, double y)
{
  return d.radius - std::hypot(x - d.cx, y - d.cy);
}

inline double square_distance(const Square& s, double x, double y)
{
  double qx = std::abs(x - s.cx) - s.half;
  double qy = std::abs(y - s.cy) - s.half;
  double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
  double inside = std::min(std::max(qx, qy), 0.0);
  return -(outside + inside);
}

inline bool strictly_inside(const Grid2D& g, double xmin, double xmax, double ymin, double ymax)
{
  return xmin > g.x0 && xmax < g.x1 && ymin > g.y0 && ymax < g.y1;
}

inline bool disk_inside(const Grid2D& g, const Disk& d)
{
  return d.radius > 0.0 &&
         strictly_inside(g, d.cx - d.radius, d.cx + d.radius, d.cy - d.radius, d.cy + d.radius);
}

} // namespace detail

/// Signed distance to the shape boundary, positive inside.
inline ScalarField signed_distance(const Shape& shape, const Grid2D& g)
{
  return ScalarField::sample(g, [&](double x, double y) {
    return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>)
          return detail::disk_distance(s, x, y);
        else if constexpr (std::is_same_v<T, TwoDisks>)
          return std::max(detail::disk_distance(s.first, x, y),
                          detail::disk_distance(s.second, x, y));
        else
          return detail::square_distance(s, x, y);
      },
      shape);
  });
}

inline void validate(const PhantomSpec& spec, const Grid2D& g)
{
  bool inside = std::visit(
    [&](const auto& s) {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, Disk>)
        return detail::disk_inside(g, s);
      else if constexpr (std::is_same_v<T, TwoDisks>)
        return detail::disk_inside(g, s.first) && detail::disk_inside(g, s.second);
      else
        return s.half > 0.0 &&
               detail::strictly_inside(g, s.cx - s.half, s.cx + s.half, s.cy - s.half, s.cy + s.half);
    },
    spec.shape);
  require(inside, "phantom shape must lie strictly inside the domain");
  for (const Law* law : {&spec.psi1, &spec.psi2})
    require(spec.box.contains(law->lo()) && spec.box.contains(law->hi()),
            "phase value law leaves the admissible box");
}

/// u_true = psi1 H(phi) + psi2 (1 - H(phi)) with the sharp H and phi the
/// signed distance to the shape.
inline Phantom make_phantom(const PhantomSpec& spec, const Grid2D& g)
{
  validate(spec, g);
  LevelSetState truth{signed_distance(spec.shape, g), sample_law(spec.psi1, g),
                      sample_law(spec.psi2, g), default_eps(g)};
  ScalarField u = project_sharp(truth.phi, truth.psi1, truth.psi2);
  return {std::move(u), std::move(truth)};
}

} // namespace lsreg
