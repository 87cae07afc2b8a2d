#pragma once

// Plain CSV artifacts. Fields are written row-major as `x,y,value`, traces
// along the ring as `s,value`; every number with 17 significant digits so a
// read reproduces the written doubles exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lsreg/grid.hpp"

namespace lsreg {

namespace detail {

inline std::string fmt17(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<double> parse_row(const std::string& line, std::size_t columns,
                                     const std::string& source, std::size_t lineno)
{
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size() && cell.find_first_not_of(" \r\t", used) != std::string::npos)
        throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw IoError(source + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
    }
  }
  if (out.size() != columns)
    throw IoError(source + ":" + std::to_string(lineno) + ": expected " +
                  std::to_string(columns) + " columns");
  return out;
}

inline std::vector<std::vector<double>> read_table(std::istream& in, const std::string& header,
                                                   std::size_t columns, const std::string& source)
{
  std::string line;
  if (!std::getline(in, line) || line.substr(0, header.size()) != header)
    throw IoError(source + ": missing header '" + header + "'");
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r")
      continue;
    rows.push_back(parse_row(line, columns, source, lineno));
  }
  return rows;
}

inline std::ofstream open_out(const std::filesystem::path& path)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  return in;
}

} // namespace detail

inline void write_field(std::ostream& out, const ScalarField& f)
{
  const auto& g = f.grid();
  out << "x,y,value\n";
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out << detail::fmt17(g.x(i)) << ',' << detail::fmt17(g.y(j)) << ','
          << detail::fmt17(f(i, j)) << '\n';
}

inline void write_trace(std::ostream& out, const BoundaryTrace& t)
{
  auto s = boundary_arclength(t.grid());
  out << "s,value\n";
  for (std::size_t k = 0; k < t.size(); ++k)
    out << detail::fmt17(s[k]) << ',' << detail::fmt17(t[k]) << '\n';
}

/// Reads a field written by write_field back onto `g`; the node count must
/// match.
inline ScalarField read_field(std::istream& in, const Grid2D& g, const std::string& source = "field")
{
  auto rows = detail::read_table(in, "x,y,value", 3, source);
  if (rows.size() != g.size())
    throw IoError(source + ": " + std::to_string(rows.size()) + " rows for a grid of " +
                  std::to_string(g.size()) + " nodes");
  ScalarField f(g);
  for (std::size_t k = 0; k < rows.size(); ++k)
    f[k] = rows[k][2];
  return f;
}

inline BoundaryTrace read_trace(std::istream& in, const Grid2D& g, const std::string& source = "trace")
{
  auto rows = detail::read_table(in, "s,value", 2, source);
  if (rows.size() != g.boundary_size())
    throw IoError(source + ": " + std::to_string(rows.size()) + " rows for a ring of " +
                  std::to_string(g.boundary_size()) + " nodes");
  BoundaryTrace t(g);
  for (std::size_t k = 0; k < rows.size(); ++k)
    t[k] = rows[k][1];
  return t;
}

inline void save_field(const std::filesystem::path& path, const ScalarField& f)
{
  auto out = detail::open_out(path);
  write_field(out, f);
  if (!out)
    throw IoError("write failed: " + path.string());
}

inline void save_trace(const std::filesystem::path& path, const BoundaryTrace& t)
{
  auto out = detail::open_out(path);
  write_trace(out, t);
  if (!out)
    throw IoError("write failed: " + path.string());
}

inline ScalarField load_field(const std::filesystem::path& path, const Grid2D& g)
{
  auto in = detail::open_in(path);
  return read_field(in, g, path.string());
}

inline BoundaryTrace load_trace(const std::filesystem::path& path, const Grid2D& g)
{
  auto in = detail::open_in(path);
  return read_trace(in, g, path.string());
}

inline void save_text(const std::filesystem::path& path, const std::string& text)
{
  auto out = detail::open_out(path);
  out << text;
  if (!out)
    throw IoError("write failed: " + path.string());
}

} // namespace lsreg
