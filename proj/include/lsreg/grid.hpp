#pragma once

// Uniform node-centred grids on a rectangle, value-semantic fields on them,
// second-order difference operators, trapezoidal quadrature and the
// boundary ring used for all boundary data.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "lsreg/errors.hpp"

namespace lsreg {

struct Grid2D
{
  int nx = 0;
  int ny = 0;
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;

  Grid2D() = default;

  Grid2D(int nx_, int ny_, double x0_ = 0.0, double x1_ = 1.0, double y0_ = 0.0,
         double y1_ = 1.0)
    : nx(nx_), ny(ny_), x0(x0_), x1(x1_), y0(y0_), y1(y1_)
  {
    require(nx >= 3 && ny >= 3, "grid needs at least 3 nodes per axis");
    require(x1 > x0 && y1 > y0, "grid extents must be increasing");
  }

  static Grid2D unit_square(int n) { return Grid2D(n, n); }

  double hx() const { return (x1 - x0) / (nx - 1); }
  double hy() const { return (y1 - y0) / (ny - 1); }
  double x(int i) const { return x0 + i * hx(); }
  double y(int j) const { return y0 + j * hy(); }

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t index(int i, int j) const
  {
    return static_cast<std::size_t>(j) * nx + i;
  }
  bool on_boundary(int i, int j) const
  {
    return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
  }
  std::size_t boundary_size() const
  {
    return 2 * static_cast<std::size_t>(nx - 1) + 2 * static_cast<std::size_t>(ny - 1);
  }

  bool operator==(const Grid2D&) const = default;
};

struct NodeIndex
{
  int i;
  int j;
};

/// Boundary ring in counter-clockwise order starting at (x0, y0).
inline std::vector<NodeIndex> boundary_nodes(const Grid2D& g)
{
  std::vector<NodeIndex> ring;
  ring.reserve(g.boundary_size());
  for (int i = 0; i < g.nx - 1; ++i)
    ring.push_back({i, 0});
  for (int j = 0; j < g.ny - 1; ++j)
    ring.push_back({g.nx - 1, j});
  for (int i = g.nx - 1; i > 0; --i)
    ring.push_back({i, g.ny - 1});
  for (int j = g.ny - 1; j > 0; --j)
    ring.push_back({0, j});
  return ring;
}

class ScalarField
{
public:
  ScalarField() = default;

  explicit ScalarField(const Grid2D& grid, double value = 0.0)
    : grid_(grid), values_(grid.size(), value)
  {}

  ScalarField(const Grid2D& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values))
  {
    require(values_.size() == grid_.size(), "field size does not match grid");
  }

  /// Samples f(x, y) at every node.
  template <typename Fn>
  static ScalarField sample(const Grid2D& grid, Fn&& f)
  {
    ScalarField out(grid);
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        out(i, j) = f(grid.x(i), grid.y(j));
    return out;
  }

  const Grid2D& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  bool all_finite() const
  {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  ScalarField& operator+=(const ScalarField& o)
  {
    check_same(o);
    for (std::size_t k = 0; k < values_.size(); ++k)
      values_[k] += o.values_[k];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o)
  {
    check_same(o);
    for (std::size_t k = 0; k < values_.size(); ++k)
      values_[k] -= o.values_[k];
    return *this;
  }
  ScalarField& operator*=(double s)
  {
    for (auto& v : values_)
      v *= s;
    return *this;
  }
  ScalarField& operator+=(double s)
  {
    for (auto& v : values_)
      v += s;
    return *this;
  }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator-(ScalarField a) { return a *= -1.0; }

  bool operator==(const ScalarField&) const = default;

  void check_same(const ScalarField& o) const
  {
    require(grid_ == o.grid_, "fields live on different grids");
  }

private:
  Grid2D grid_;
  std::vector<double> values_;
};

/// Pointwise f(a_k).
template <typename Fn>
ScalarField map(const ScalarField& a, Fn&& f)
{
  ScalarField out(a.grid());
  for (std::size_t k = 0; k < a.size(); ++k)
    out[k] = f(a[k]);
  return out;
}

/// Pointwise f(a_k, b_k).
template <typename Fn>
ScalarField zip(const ScalarField& a, const ScalarField& b, Fn&& f)
{
  a.check_same(b);
  ScalarField out(a.grid());
  for (std::size_t k = 0; k < a.size(); ++k)
    out[k] = f(a[k], b[k]);
  return out;
}

inline ScalarField hadamard(const ScalarField& a, const ScalarField& b)
{
  return zip(a, b, std::multiplies<>{});
}

struct VectorField
{
  ScalarField x;
  ScalarField y;

  const Grid2D& grid() const { return x.grid(); }
};

class BoundaryTrace
{
public:
  BoundaryTrace() = default;

  explicit BoundaryTrace(const Grid2D& grid, double value = 0.0)
    : grid_(grid), values_(grid.boundary_size(), value)
  {}

  BoundaryTrace(const Grid2D& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values))
  {
    require(values_.size() == grid_.boundary_size(),
            "trace length does not match the boundary ring");
  }

  const Grid2D& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }

  BoundaryTrace& operator+=(const BoundaryTrace& o)
  {
    check_same(o);
    for (std::size_t k = 0; k < values_.size(); ++k)
      values_[k] += o.values_[k];
    return *this;
  }
  BoundaryTrace& operator-=(const BoundaryTrace& o)
  {
    check_same(o);
    for (std::size_t k = 0; k < values_.size(); ++k)
      values_[k] -= o.values_[k];
    return *this;
  }
  BoundaryTrace& operator*=(double s)
  {
    for (auto& v : values_)
      v *= s;
    return *this;
  }

  friend BoundaryTrace operator+(BoundaryTrace a, const BoundaryTrace& b) { return a += b; }
  friend BoundaryTrace operator-(BoundaryTrace a, const BoundaryTrace& b) { return a -= b; }
  friend BoundaryTrace operator*(BoundaryTrace a, double s) { return a *= s; }
  friend BoundaryTrace operator*(double s, BoundaryTrace a) { return a *= s; }
  friend BoundaryTrace operator-(BoundaryTrace a) { return a *= -1.0; }

  bool operator==(const BoundaryTrace&) const = default;

  void check_same(const BoundaryTrace& o) const
  {
    require(grid_ == o.grid_, "traces live on different grids");
  }

private:
  Grid2D grid_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Quadrature

/// Trapezoidal nodal weights for integrals over the rectangle.
inline ScalarField domain_weights(const Grid2D& g)
{
  ScalarField w(g);
  const double cell = g.hx() * g.hy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double fx = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
      double fy = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
      w(i, j) = cell * fx * fy;
    }
  return w;
}

/// Trapezoidal arc-length weights on the closed boundary ring.
inline std::vector<double> boundary_weights(const Grid2D& g)
{
  std::vector<double> w;
  w.reserve(g.boundary_size());
  for (auto [i, j] : boundary_nodes(g)) {
    bool corner = (i == 0 || i == g.nx - 1) && (j == 0 || j == g.ny - 1);
    if (corner)
      w.push_back(0.5 * (g.hx() + g.hy()));
    else if (j == 0 || j == g.ny - 1)
      w.push_back(g.hx());
    else
      w.push_back(g.hy());
  }
  return w;
}

/// Arc-length coordinate of each ring node, starting at 0 at (x0, y0).
inline std::vector<double> boundary_arclength(const Grid2D& g)
{
  std::vector<double> s;
  s.reserve(g.boundary_size());
  double acc = 0.0;
  auto ring = boundary_nodes(g);
  for (std::size_t k = 0; k < ring.size(); ++k) {
    s.push_back(acc);
    const auto& a = ring[k];
    const auto& b = ring[(k + 1) % ring.size()];
    acc += std::hypot((b.i - a.i) * g.hx(), (b.j - a.j) * g.hy());
  }
  return s;
}

inline double integrate(const ScalarField& f)
{
  auto w = domain_weights(f.grid());
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
    acc += w[k] * f[k];
  return acc;
}

inline double inner(const ScalarField& a, const ScalarField& b)
{
  a.check_same(b);
  auto w = domain_weights(a.grid());
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    acc += w[k] * a[k] * b[k];
  return acc;
}

/// Weighted mean over the domain.
inline double mean(const ScalarField& f)
{
  const auto& g = f.grid();
  return integrate(f) / ((g.x1 - g.x0) * (g.y1 - g.y0));
}

inline double inner(const BoundaryTrace& a, const BoundaryTrace& b)
{
  a.check_same(b);
  auto w = boundary_weights(a.grid());
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    acc += w[k] * a[k] * b[k];
  return acc;
}

inline double l2_norm(const BoundaryTrace& t) { return std::sqrt(inner(t, t)); }

/// Weighted mean along the boundary.
inline double mean(const BoundaryTrace& t)
{
  auto w = boundary_weights(t.grid());
  double acc = 0.0, len = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    acc += w[k] * t[k];
    len += w[k];
  }
  return acc / len;
}

// ---------------------------------------------------------------------------
// Difference operators

namespace detail {

// d/dx at node (i, j) along an axis with n nodes and spacing h; `at(k)`
// returns the value at position k on that axis.
template <typename At>
double axis_derivative(At&& at, int k, int n, double h)
{
  if (k == 0)
    return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (k == n - 1)
    return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
  return (at(k + 1) - at(k - 1)) / (2.0 * h);
}

inline double dx(const ScalarField& f, int i, int j)
{
  const auto& g = f.grid();
  return axis_derivative([&](int k) { return f(k, j); }, i, g.nx, g.hx());
}

inline double dy(const ScalarField& f, int i, int j)
{
  const auto& g = f.grid();
  return axis_derivative([&](int k) { return f(i, k); }, j, g.ny, g.hy());
}

} // namespace detail

/// Central differences inside, second-order one-sided differences on the
/// boundary ring.
inline VectorField gradient(const ScalarField& f)
{
  const auto& g = f.grid();
  VectorField out{ScalarField(g), ScalarField(g)};
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      out.x(i, j) = detail::dx(f, i, j);
      out.y(i, j) = detail::dy(f, i, j);
    }
  return out;
}

inline ScalarField divergence(const VectorField& v)
{
  require(v.x.grid() == v.y.grid(), "vector field components on different grids");
  const auto& g = v.grid();
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out(i, j) = detail::dx(v.x, i, j) + detail::dy(v.y, i, j);
  return out;
}

/// 5-point Laplacian; boundary rows use ghost-node reflection, i.e. a
/// homogeneous Neumann closure.
inline ScalarField laplacian(const ScalarField& f)
{
  const auto& g = f.grid();
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double left = f(i == 0 ? 1 : i - 1, j);
      double right = f(i == g.nx - 1 ? g.nx - 2 : i + 1, j);
      double down = f(i, j == 0 ? 1 : j - 1);
      double up = f(i, j == g.ny - 1 ? g.ny - 2 : j + 1);
      double c = f(i, j);
      out(i, j) = (left - 2.0 * c + right) * ihx2 + (down - 2.0 * c + up) * ihy2;
    }
  return out;
}

/// div( grad f / sqrt(|grad f|^2 + beta^2) ), the smoothed mean-curvature
/// operator of the level lines of f.
inline ScalarField curvature_div(const ScalarField& f, double beta_tv)
{
  require(beta_tv > 0.0, "curvature smoothing parameter must be positive");
  auto grad = gradient(f);
  for (std::size_t k = 0; k < f.size(); ++k) {
    double q = std::sqrt(grad.x[k] * grad.x[k] + grad.y[k] * grad.y[k] + beta_tv * beta_tv);
    grad.x[k] /= q;
    grad.y[k] /= q;
  }
  return divergence(grad);
}

enum class NormKind { L1, L2, H1, TVSmoothed };

/// Trapezoidal norms. `beta_tv` is only read for TVSmoothed, which evaluates
/// sum (sqrt(|grad f|^2 + beta^2) - beta) * weight so constants give 0.
inline double norm(const ScalarField& f, NormKind kind, double beta_tv = 0.0)
{
  auto w = domain_weights(f.grid());
  double acc = 0.0;
  switch (kind) {
  case NormKind::L1:
    for (std::size_t k = 0; k < f.size(); ++k)
      acc += w[k] * std::abs(f[k]);
    return acc;
  case NormKind::L2:
    for (std::size_t k = 0; k < f.size(); ++k)
      acc += w[k] * f[k] * f[k];
    return std::sqrt(acc);
  case NormKind::H1: {
    auto grad = gradient(f);
    for (std::size_t k = 0; k < f.size(); ++k)
      acc += w[k] * (f[k] * f[k] + grad.x[k] * grad.x[k] + grad.y[k] * grad.y[k]);
    return std::sqrt(acc);
  }
  case NormKind::TVSmoothed: {
    require(beta_tv > 0.0, "TV smoothing parameter must be positive");
    auto grad = gradient(f);
    for (std::size_t k = 0; k < f.size(); ++k) {
      double q = std::sqrt(grad.x[k] * grad.x[k] + grad.y[k] * grad.y[k] + beta_tv * beta_tv);
      acc += w[k] * (q - beta_tv);
    }
    return acc;
  }
  }
  throw InvalidArgument("unknown norm kind");
}

// ---------------------------------------------------------------------------
// Boundary data

inline BoundaryTrace boundary_trace(const ScalarField& f)
{
  const auto& g = f.grid();
  BoundaryTrace t(g);
  auto ring = boundary_nodes(g);
  for (std::size_t k = 0; k < ring.size(); ++k)
    t[k] = f(ring[k].i, ring[k].j);
  return t;
}

/// Copy of f with its boundary ring overwritten by t.
inline ScalarField with_boundary(ScalarField f, const BoundaryTrace& t)
{
  require(f.grid() == t.grid(), "trace and field on different grids");
  auto ring = boundary_nodes(f.grid());
  for (std::size_t k = 0; k < ring.size(); ++k)
    f(ring[k].i, ring[k].j) = t[k];
  return f;
}

namespace detail {

// Coefficients of the outward one-sided normal derivative: sum_m c_m f(node_m).
struct NormalStencil
{
  NodeIndex node[6];
  double coeff[6];
  int count = 0;

  void add(int i, int j, double c)
  {
    node[count] = {i, j};
    coeff[count] = c;
    ++count;
  }
};

inline NormalStencil normal_stencil(const Grid2D& g, int i, int j)
{
  NormalStencil s;
  bool left = i == 0, right = i == g.nx - 1, bottom = j == 0, top = j == g.ny - 1;
  const double scale = 1.0 / (int(left) + int(right) + int(bottom) + int(top));
  const double ax = scale / (2.0 * g.hx());
  const double ay = scale / (2.0 * g.hy());
  if (left) {
    s.add(0, j, 3.0 * ax);
    s.add(1, j, -4.0 * ax);
    s.add(2, j, ax);
  }
  if (right) {
    s.add(g.nx - 1, j, 3.0 * ax);
    s.add(g.nx - 2, j, -4.0 * ax);
    s.add(g.nx - 3, j, ax);
  }
  if (bottom) {
    s.add(i, 0, 3.0 * ay);
    s.add(i, 1, -4.0 * ay);
    s.add(i, 2, ay);
  }
  if (top) {
    s.add(i, g.ny - 1, 3.0 * ay);
    s.add(i, g.ny - 2, -4.0 * ay);
    s.add(i, g.ny - 3, ay);
  }
  return s;
}

} // namespace detail

/// Outward normal derivative on the ring by second-order one-sided
/// differences; corners take the mean of the two edge derivatives.
inline BoundaryTrace normal_derivative(const ScalarField& f)
{
  const auto& g = f.grid();
  BoundaryTrace t(g);
  auto ring = boundary_nodes(g);
  for (std::size_t k = 0; k < ring.size(); ++k) {
    auto s = detail::normal_stencil(g, ring[k].i, ring[k].j);
    double acc = 0.0;
    for (int m = 0; m < s.count; ++m)
      acc += s.coeff[m] * f(s.node[m].i, s.node[m].j);
    t[k] = acc;
  }
  return t;
}

/// Euclidean transpose of normal_derivative: <N f, t> = <f, N^T t> with
/// plain (unweighted) sums on both sides.
inline ScalarField normal_derivative_transpose(const BoundaryTrace& t)
{
  const auto& g = t.grid();
  ScalarField out(g);
  auto ring = boundary_nodes(g);
  for (std::size_t k = 0; k < ring.size(); ++k) {
    auto s = detail::normal_stencil(g, ring[k].i, ring[k].j);
    for (int m = 0; m < s.count; ++m)
      out(s.node[m].i, s.node[m].j) += s.coeff[m] * t[k];
  }
  return out;
}

} // namespace lsreg
