#pragma once

// Grid CSV: header `x,y,value,mask`, one line per node, rows of constant y in increasing
// order. Numbers use the shortest round-trip representation; Outside nodes carry "nan".

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sublinop/error.hpp"
#include "sublinop/mvsolve.hpp"

namespace sublinop {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_csv(const GridFn& u, std::ostream& os) {
  const Grid2& g = *u.grid;
  os << "x,y,value,mask\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    os << format_double(g.x(k)) << ',' << format_double(g.y(k)) << ',' << format_double(u.values[k]) << ','
       << to_string(g.kind(k)) << '\n';
  }
}

namespace detail {

inline double parse_double(const std::string& s, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("grid csv line " + std::to_string(line) + ": bad number \"" + s + "\"");
  }
  return v;
}

}  // namespace detail

/// Reads a grid written by write_csv; the lattice geometry is recovered from the x and y
/// columns and must be uniform.
inline GridFn read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("x,y,value,mask", 0) != 0) {
    throw ParseError("grid csv: expected header x,y,value,mask");
  }
  struct Row {
    double x, y, v;
    NodeKind kind;
  };
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) throw ParseError("grid csv line " + std::to_string(lineno) + ": expected 4 fields");
    NodeKind kind;
    if (cells[3] == "interior") kind = NodeKind::Interior;
    else if (cells[3] == "band") kind = NodeKind::BoundaryBand;
    else if (cells[3] == "outside") kind = NodeKind::Outside;
    else throw ParseError("grid csv line " + std::to_string(lineno) + ": unknown mask \"" + cells[3] + "\"");
    rows.push_back({detail::parse_double(cells[0], lineno), detail::parse_double(cells[1], lineno),
                    detail::parse_double(cells[2], lineno), kind});
  }
  if (rows.size() < 4) throw ParseError("grid csv: too few nodes");

  double x0 = rows[0].x, y0 = rows[0].y;
  int nx = 0;
  while (nx < static_cast<int>(rows.size()) && rows[nx].y == y0) ++nx;
  if (nx < 2 || rows.size() % nx != 0) throw ParseError("grid csv: nodes do not form a rectangular lattice");
  const int ny = static_cast<int>(rows.size() / nx);
  // the span over the whole row is far less sensitive to rounding than one step
  const double h = (rows[nx - 1].x - x0) / (nx - 1);
  if (!(h > 0.0)) throw ParseError("grid csv: non-increasing x");
  std::vector<NodeKind> mask(rows.size());
  std::vector<double> values(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const int i = static_cast<int>(k % nx);
    const int j = static_cast<int>(k / nx);
    const double tol = 1e-9 * (1.0 + std::abs(x0) + std::abs(y0) + h * std::max(nx, ny));
    if (std::abs(rows[k].x - (x0 + i * h)) > tol || std::abs(rows[k].y - (y0 + j * h)) > tol) {
      throw ParseError("grid csv line " + std::to_string(k + 2) + ": node off the uniform lattice");
    }
    mask[k] = rows[k].kind;
    values[k] = rows[k].v;
    if (rows[k].kind != NodeKind::Outside && !std::isfinite(values[k])) {
      throw ParseError("grid csv line " + std::to_string(k + 2) + ": non-finite value on a domain node");
    }
  }
  auto grid = std::make_shared<const Grid2>(x0, y0, h, nx, ny, std::move(mask));
  return GridFn{std::move(grid), std::move(values)};
}

}  // namespace sublinop
