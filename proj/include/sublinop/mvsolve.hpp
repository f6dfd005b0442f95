#pragma once

// Two-dimensional grid numerics built on the ellipsoid mean-value characterization of
// supersolutions: ellipsoid quadrature, the discrete mean-value excess, a Dirichlet
// solver for sup_Z (ellipsoid average) = u, inf/sup convolutions and mollification.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "sublinop/error.hpp"
#include "sublinop/parallel.hpp"
#include "sublinop/rotinv.hpp"
#include "sublinop/symmat.hpp"

namespace sublinop {

enum class NodeKind : std::uint8_t { Interior, BoundaryBand, Outside };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Interior: return "interior";
    case NodeKind::BoundaryBand: return "band";
    case NodeKind::Outside: return "outside";
  }
  return "?";
}

/// Uniform nx x ny lattice, node (i, j) at (x0 + i h, y0 + j h), stored row by row.
class Grid2 {
 public:
  Grid2(double x0, double y0, double h, int nx, int ny, std::vector<NodeKind> mask)
      : x0_(x0), y0_(y0), h_(h), nx_(nx), ny_(ny), mask_(std::move(mask)) {
    if (!(h > 0.0) || nx < 1 || ny < 1) throw DomainError("Grid2: bad geometry");
    detail::check_same(mask_.size(), static_cast<std::size_t>(nx) * ny, "Grid2 mask");
  }

  /// Open square (-half, half)^2 with `cells` cells across it, surrounded by a band of
  /// `band` extra node layers.
  static std::shared_ptr<const Grid2> square(double half, int cells, int band) {
    if (cells < 2 || band < 1) throw DomainError("square grid: need cells >= 2, band >= 1");
    const double h = 2.0 * half / cells;
    const int n = cells + 1 + 2 * band;
    std::vector<NodeKind> mask(static_cast<std::size_t>(n) * n, NodeKind::BoundaryBand);
    for (int j = band + 1; j < band + cells; ++j)
      for (int i = band + 1; i < band + cells; ++i) mask[j * n + i] = NodeKind::Interior;
    const double o = -half - band * h;
    return std::make_shared<Grid2>(o, o, h, n, n, std::move(mask));
  }

  /// Annulus rin < |x| < rout with `cells` cells across [-rout, rout]. Nodes within
  /// band * h of the annulus carry boundary data; the rest are Outside.
  static std::shared_ptr<const Grid2> annulus(double rin, double rout, int cells, int band) {
    if (!(0.0 <= rin && rin < rout)) throw DomainError("annulus grid: need 0 <= rin < rout");
    if (cells < 2 || band < 1) throw DomainError("annulus grid: need cells >= 2, band >= 1");
    const double h = 2.0 * rout / cells;
    const int n = cells + 1 + 2 * band;
    const double o = -rout - band * h;
    const double width = band * h;
    std::vector<NodeKind> mask(static_cast<std::size_t>(n) * n, NodeKind::Outside);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const double x = o + i * h;
        const double y = o + j * h;
        const double r = std::hypot(x, y);
        NodeKind k = NodeKind::Outside;
        if (r > rin && r < rout) k = NodeKind::Interior;
        else if ((r >= rout && r - rout <= width) || (r <= rin && rin - r <= width)) k = NodeKind::BoundaryBand;
        mask[j * n + i] = k;
      }
    }
    return std::make_shared<Grid2>(o, o, h, n, n, std::move(mask));
  }

  double x0() const noexcept { return x0_; }
  double y0() const noexcept { return y0_; }
  double h() const noexcept { return h_; }
  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  std::size_t size() const noexcept { return mask_.size(); }
  std::size_t index(int i, int j) const noexcept { return static_cast<std::size_t>(j) * nx_ + i; }
  int col(std::size_t k) const noexcept { return static_cast<int>(k % nx_); }
  int row(std::size_t k) const noexcept { return static_cast<int>(k / nx_); }
  double x(std::size_t k) const noexcept { return x0_ + col(k) * h_; }
  double y(std::size_t k) const noexcept { return y0_ + row(k) * h_; }
  bool contains(int i, int j) const noexcept { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }
  NodeKind kind(std::size_t k) const noexcept { return mask_[k]; }
  NodeKind kind(int i, int j) const noexcept { return mask_[index(i, j)]; }
  const std::vector<NodeKind>& mask() const noexcept { return mask_; }

 private:
  double x0_, y0_, h_;
  int nx_, ny_;
  std::vector<NodeKind> mask_;
};

/// Band width in cells that keeps ellipsoid stencils of radius eps * sqrt(Lambda) inside
/// Interior ∪ BoundaryBand, including the bilinear cell corners.
inline int band_cells(double eps, double Lambda, double h) {
  return static_cast<int>(std::ceil(eps * std::sqrt(Lambda) / h - 1e-12)) + 2;
}

/// Values on a grid; finite on non-Outside nodes, NaN on Outside nodes.
struct GridFn {
  std::shared_ptr<const Grid2> grid;
  std::vector<double> values;

  double operator[](std::size_t k) const { return values[k]; }
  double& operator[](std::size_t k) { return values[k]; }
};

/// Samples f(x, y) on every non-Outside node.
template <typename Fn>
GridFn sample(const std::shared_ptr<const Grid2>& grid, Fn&& f) {
  GridFn u{grid, std::vector<double>(grid->size(), std::numeric_limits<double>::quiet_NaN())};
  for (std::size_t k = 0; k < grid->size(); ++k)
    if (grid->kind(k) != NodeKind::Outside) u.values[k] = f(grid->x(k), grid->y(k));
  return u;
}

// ---------------------------------------------------------------------------
// Ellipsoid quadrature.

/// Equal-weight rule for the average over E_Z(x0, eps) = {x0 + eps sqrt(Z) x : |x| < 1}.
struct EllipsoidRule {
  SymMat Z;
  double eps = 0.0;
  std::vector<std::array<double, 2>> nodes;  // offsets from the center
  double weight = 0.0;                       // 1 / nodes.size()
};

inline constexpr std::size_t kMinRuleNodes = 200;

/// Midpoint lattice of the unit disc (density^2 cells on [-1, 1]^2, centers with |c| < 1),
/// radially rescaled so that its second moment equals the disc's 1/4, then mapped by
/// eps * sqrt(Z). The rescaling keeps every node strictly inside the disc.
inline EllipsoidRule build_rule(const SymMat& Z, double eps, int density) {
  if (Z.dim() != 2) throw DimensionError("build_rule: two-dimensional rules only");
  if (!(eps > 0.0)) throw DomainError("build_rule: eps must be positive");
  const Spectrum s = eigh(Z);
  if (!(s.eigenvalues[0] > 1e-12)) throw DomainError("build_rule: Z is not positive definite");
  const SymMat root = spectral_apply(s, [](double l) { return std::sqrt(l); });

  std::vector<std::array<double, 2>> disc;
  double second = 0.0;
  double rmax = 0.0;
  for (int b = 0; b < density; ++b) {
    for (int a = 0; a < density; ++a) {
      const double cx = (a + 0.5) * 2.0 / density - 1.0;
      const double cy = (b + 0.5) * 2.0 / density - 1.0;
      const double r2 = cx * cx + cy * cy;
      if (r2 < 1.0) {
        disc.push_back({cx, cy});
        second += cx * cx;
        rmax = std::max(rmax, std::sqrt(r2));
      }
    }
  }
  if (disc.size() < kMinRuleNodes) throw DomainError("build_rule: density too low (fewer than 200 nodes)");
  second /= static_cast<double>(disc.size());
  const double scale = std::min(std::sqrt(0.25 / second), (1.0 - 1e-9) / rmax);

  EllipsoidRule rule{Z, eps, {}, 1.0 / static_cast<double>(disc.size())};
  rule.nodes.reserve(disc.size());
  for (const auto& c : disc) {
    const double px = eps * scale * c[0];
    const double py = eps * scale * c[1];
    rule.nodes.push_back({root(0, 0) * px + root(0, 1) * py, root(1, 0) * px + root(1, 1) * py});
  }
  return rule;
}

/// The ellipsoid rule pulled onto grid nodes by bilinear interpolation: nonnegative
/// weights on integer offsets, summing to 1.
struct GridStencil {
  std::vector<std::array<int, 2>> offsets;
  std::vector<double> weights;
  int reach = 0;  // max |offset| component
};

inline GridStencil compile_stencil(const EllipsoidRule& rule, double h) {
  std::map<std::array<int, 2>, double> acc;
  for (const auto& q : rule.nodes) {
    const double fx = q[0] / h;
    const double fy = q[1] / h;
    const int i0 = static_cast<int>(std::floor(fx));
    const int j0 = static_cast<int>(std::floor(fy));
    const double tx = fx - i0;
    const double ty = fy - j0;
    const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
    const std::array<int, 2> o[4] = {{i0, j0}, {i0 + 1, j0}, {i0, j0 + 1}, {i0 + 1, j0 + 1}};
    for (int c = 0; c < 4; ++c)
      if (w[c] > 0.0) acc[o[c]] += w[c] * rule.weight;
  }
  GridStencil st;
  for (const auto& [off, w] : acc) {
    st.offsets.push_back(off);
    st.weights.push_back(w);
    st.reach = std::max({st.reach, std::abs(off[0]), std::abs(off[1])});
  }
  return st;
}

/// Bilinear interpolation of a quadratic overshoots by h^2/2 (tx(1-tx) a11 + ty(1-ty) a22),
/// i.e. it adds artificial diffusion. This shrinks the rule's Z until the interpolated
/// second moments equal those of E_Z itself. The shrunk ellipsoid sits inside E_Z and all
/// weights stay nonnegative.
inline GridStencil compensated_stencil(const SymMat& Z, double eps, int density, double h) {
  SymMat zc = Z;
  GridStencil st;
  for (int it = 0; it < 6; ++it) {
    const EllipsoidRule rule = build_rule(zc, eps, density);
    double bx = 0.0, by = 0.0;
    for (const auto& q : rule.nodes) {
      const double tx = q[0] / h - std::floor(q[0] / h);
      const double ty = q[1] / h - std::floor(q[1] / h);
      bx += tx * (1.0 - tx);
      by += ty * (1.0 - ty);
    }
    bx *= rule.weight;
    by *= rule.weight;
    const double k = 4.0 * h * h / (eps * eps);
    const SymMat next = Z - SymMat::diag({k * bx, k * by});
    if (!(eigenvalues(next)[0] > 1e-12)) {
      throw DomainError("mean-value stencil: eps too small against h for moment compensation");
    }
    zc = next;
  }
  return compile_stencil(build_rule(zc, eps, density), h);
}

enum class Interpolation { Plain, MomentMatched };

/// Finite set of positive definite Z discretizing the extreme points of a body in S(2).
class ZFamily {
 public:
  explicit ZFamily(std::vector<SymMat> members) : members_(std::move(members)) {
    if (members_.empty()) throw DomainError("ZFamily: no positive definite members");
    for (const auto& z : members_) {
      if (z.dim() != 2) throw DimensionError("ZFamily: two-dimensional members only");
      if (!(eigenvalues(z)[0] > 1e-12)) throw DomainError("ZFamily: member not positive definite");
    }
  }

  /// R_theta diag(a) R_theta^T for every seed a with positive components and
  /// theta = k pi / m. Ball bodies use m seeds sampled on their boundary circle. Seeds with
  /// a zero component give singular ellipsoids and are left out.
  static ZFamily from_body(const RotInvBody& body, int m) {
    if (body.dim() != 2) throw DimensionError("ZFamily: two-dimensional bodies only");
    if (m < 1) throw DomainError("ZFamily: need at least one rotation");
    std::vector<SpecVec> seeds;
    if (const auto* b = body.as_ball()) {
      for (int k = 0; k < m; ++k) {
        const double t = std::numbers::pi * (0.25 + static_cast<double>(k) / m);
        seeds.push_back(SpecVec{1.0 + b->delta * std::cos(t), 1.0 + b->delta * std::sin(t)});
      }
    } else {
      seeds = body.hull()->seeds;
    }
    std::vector<SymMat> out;
    for (const auto& a : seeds) {
      if (!(std::min(a[0], a[1]) > 1e-12)) continue;
      const bool isotropic = std::abs(a[0] - a[1]) <= 1e-14 * std::abs(a[1]);
      const int count = isotropic ? 1 : m;
      for (int k = 0; k < count; ++k) {
        const double t = std::numbers::pi * k / m;
        SquareMat r(2);
        r(0, 0) = std::cos(t);
        r(0, 1) = -std::sin(t);
        r(1, 0) = std::sin(t);
        r(1, 1) = std::cos(t);
        out.push_back(SymMat::conjugate(r, SymMat::diag(a)));
      }
    }
    return ZFamily(std::move(out));
  }

  const std::vector<SymMat>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  double max_eigenvalue() const {
    double hi = 0.0;
    for (const auto& z : members_) hi = std::max(hi, eigenvalues(z)[1]);
    return hi;
  }

 private:
  std::vector<SymMat> members_;
};

inline constexpr int kDefaultDensity = 41;
inline constexpr int kDefaultRotations = 16;

/// The family of ellipsoid averages compiled against one grid.
class MeanValueScheme {
 public:
  MeanValueScheme(std::shared_ptr<const Grid2> grid, const ZFamily& family, double eps,
                  int density = kDefaultDensity, Interpolation interp = Interpolation::MomentMatched)
      : grid_(std::move(grid)), eps_(eps) {
    for (const auto& z : family.members()) {
      stencils_.push_back(interp == Interpolation::Plain ? compile_stencil(build_rule(z, eps, density), grid_->h())
                                                         : compensated_stencil(z, eps, density, grid_->h()));
    }
  }

  const Grid2& grid() const noexcept { return *grid_; }
  const std::shared_ptr<const Grid2>& grid_ptr() const noexcept { return grid_; }
  double eps() const noexcept { return eps_; }
  const std::vector<GridStencil>& stencils() const noexcept { return stencils_; }

  bool covered(std::size_t node) const {
    const int i = grid_->col(node);
    const int j = grid_->row(node);
    for (const auto& st : stencils_) {
      for (const auto& o : st.offsets) {
        const int a = i + o[0];
        const int b = j + o[1];
        if (!grid_->contains(a, b) || grid_->kind(a, b) == NodeKind::Outside) return false;
      }
    }
    return true;
  }

  /// Throws unless every Interior node's stencils stay on Interior ∪ BoundaryBand.
  void require_covered() const {
    for (std::size_t k = 0; k < grid_->size(); ++k) {
      if (grid_->kind(k) == NodeKind::Interior && !covered(k)) {
        throw DomainError("mean-value stencil escapes the grid; widen the boundary band");
      }
    }
  }

  double average(const GridFn& u, std::size_t node, std::size_t which) const {
    const GridStencil& st = stencils_[which];
    const int i = grid_->col(node);
    const int j = grid_->row(node);
    double s = 0.0;
    for (std::size_t q = 0; q < st.offsets.size(); ++q)
      s += st.weights[q] * u.values[grid_->index(i + st.offsets[q][0], j + st.offsets[q][1])];
    return s;
  }

  /// (max over Z of the average, index of the first maximizer).
  std::pair<double, std::size_t> best_average(const GridFn& u, std::size_t node) const {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t z = 0; z < stencils_.size(); ++z) {
      const double a = average(u, node, z);
      if (a > best) {
        best = a;
        arg = z;
      }
    }
    return {best, arg};
  }

 private:
  std::shared_ptr<const Grid2> grid_;
  double eps_;
  std::vector<GridStencil> stencils_;
};

/// sup over the family of the ellipsoid average of u around `node`, minus u(node).
inline double mv_excess(const GridFn& u, std::size_t node, const MeanValueScheme& scheme) {
  if (scheme.grid().kind(node) != NodeKind::Interior) throw DomainError("mv_excess: node is not interior");
  if (!scheme.covered(node)) throw DomainError("mv_excess: stencil escapes the grid");
  return scheme.best_average(u, node).first - u.values[node];
}

/// mv_excess at every Interior node whose stencils are covered; NaN elsewhere.
inline GridFn mv_excess_field(const GridFn& u, const MeanValueScheme& scheme) {
  GridFn out{u.grid, std::vector<double>(u.values.size(), std::numeric_limits<double>::quiet_NaN())};
  parallel_for(u.values.size(), [&](std::size_t k) {
    if (scheme.grid().kind(k) == NodeKind::Interior && scheme.covered(k)) {
      out.values[k] = scheme.best_average(u, k).first - u.values[k];
    }
  });
  return out;
}

/// Largest finite value of a field restricted to a node predicate.
template <typename Pred>
double max_where(const GridFn& f, Pred&& keep) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < f.values.size(); ++k)
    if (keep(k) && std::isfinite(f.values[k])) m = std::max(m, f.values[k]);
  return m;
}

// ---------------------------------------------------------------------------
// Dirichlet solver.

enum class SolveMethod { PolicyIteration, GaussSeidel };

struct SolveOptions {
  double eps = 0.0;
  int rotations = kDefaultRotations;
  int density = kDefaultDensity;
  double tol = 1e-10;
  int max_sweeps = 100000;
  SolveMethod method = SolveMethod::PolicyIteration;
  int max_policy_iterations = 200;
  bool reverse_sweep = false;
  Interpolation interpolation = Interpolation::MomentMatched;
};

struct SolveReport {
  GridFn solution;
  int sweeps = 0;
  int policy_iterations = 0;
  double final_update = 0.0;
  double max_mv_excess = 0.0;  // max |sup average - u| over Interior nodes
  bool converged = false;
};

namespace detail {

inline double gauss_seidel_sweep(GridFn& u, const MeanValueScheme& scheme,
                                 const std::vector<std::size_t>& interior, bool reverse) {
  double worst = 0.0;
  const std::size_t count = interior.size();
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t k = interior[reverse ? count - 1 - t : t];
    const double next = scheme.best_average(u, k).first;
    worst = std::max(worst, std::abs(next - u.values[k]));
    u.values[k] = next;
  }
  return worst;
}

// Howard's algorithm: freeze the maximizing ellipsoid per node, solve the linear
// mean-value system exactly, re-select, until the selection is stable.
inline int policy_iteration(GridFn& u, const MeanValueScheme& scheme,
                            const std::vector<std::size_t>& interior, int max_iterations) {
  const Grid2& g = scheme.grid();
  std::vector<int> unknown(g.size(), -1);
  for (std::size_t t = 0; t < interior.size(); ++t) unknown[interior[t]] = static_cast<int>(t);
  const auto n_unknown = static_cast<Eigen::Index>(interior.size());
  std::vector<std::size_t> policy(interior.size(), std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> proposal(interior.size());

  int it = 0;
  for (; it < max_iterations; ++it) {
    parallel_for(interior.size(), [&](std::size_t t) {
      const std::size_t k = interior[t];
      const auto [best, arg] = scheme.best_average(u, k);
      const std::size_t old = policy[t];
      // keep the current choice unless another ellipsoid is strictly better
      if (old != std::numeric_limits<std::size_t>::max()) {
        const double cur = scheme.average(u, k, old);
        const double slack = 1e-13 * (1.0 + std::abs(cur));
        proposal[t] = best > cur + slack ? arg : old;
      } else {
        proposal[t] = arg;
      }
    });
    if (proposal == policy) break;
    policy = proposal;

    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknown);
    for (std::size_t t = 0; t < interior.size(); ++t) {
      const std::size_t k = interior[t];
      const GridStencil& st = scheme.stencils()[policy[t]];
      const int i = g.col(k);
      const int j = g.row(k);
      double diag = 1.0;
      for (std::size_t q = 0; q < st.offsets.size(); ++q) {
        const std::size_t nb = g.index(i + st.offsets[q][0], j + st.offsets[q][1]);
        const int col = unknown[nb];
        if (col < 0) rhs(static_cast<Eigen::Index>(t)) += st.weights[q] * u.values[nb];
        else if (nb == k) diag -= st.weights[q];
        else triplets.emplace_back(static_cast<Eigen::Index>(t), col, -st.weights[q]);
      }
      triplets.emplace_back(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t), diag);
    }
    Eigen::SparseMatrix<double> a(n_unknown, n_unknown);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw Error("solve_dirichlet: sparse factorization failed");
    const Eigen::VectorXd sol = lu.solve(rhs);
    for (std::size_t t = 0; t < interior.size(); ++t) u.values[interior[t]] = sol(static_cast<Eigen::Index>(t));
  }
  return it;
}

}  // namespace detail

/// Fixed point of u(x) = sup_Z (ellipsoid average of u around x) on Interior nodes, with
/// `boundary` held fixed on BoundaryBand nodes. The body must be uniformly elliptic.
/// Returns with converged = false when the sweep cap is hit.
inline SolveReport solve_dirichlet(const GridFn& boundary, const RotInvBody& body, const SolveOptions& opt) {
  const auto [lo, hi] = body.eigen_range();
  if (!(lo > kEllipticityTol)) throw DomainError("solve_dirichlet: body is not uniformly elliptic");
  if (!(opt.eps > 0.0)) throw DomainError("solve_dirichlet: eps must be positive");
  const auto& grid = boundary.grid;
  const MeanValueScheme scheme(grid, ZFamily::from_body(body, opt.rotations), opt.eps, opt.density,
                               opt.interpolation);
  scheme.require_covered();

  std::vector<std::size_t> interior;
  double min_boundary = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid->size(); ++k) {
    const NodeKind kind = grid->kind(k);
    if (kind == NodeKind::Interior) interior.push_back(k);
    else if (kind == NodeKind::BoundaryBand) {
      if (!std::isfinite(boundary.values[k])) throw DomainError("solve_dirichlet: non-finite boundary value");
      min_boundary = std::min(min_boundary, boundary.values[k]);
    }
  }
  if (interior.empty()) throw DomainError("solve_dirichlet: no interior nodes");

  SolveReport rep;
  rep.solution = boundary;
  for (std::size_t k : interior) rep.solution.values[k] = min_boundary;

  if (opt.method == SolveMethod::PolicyIteration) {
    rep.policy_iterations = detail::policy_iteration(rep.solution, scheme, interior, opt.max_policy_iterations);
  }
  rep.final_update = std::numeric_limits<double>::infinity();
  while (rep.sweeps < opt.max_sweeps) {
    rep.final_update = detail::gauss_seidel_sweep(rep.solution, scheme, interior, opt.reverse_sweep);
    ++rep.sweeps;
    if (rep.final_update < opt.tol) {
      rep.converged = true;
      break;
    }
  }
  double worst = 0.0;
  for (std::size_t k : interior)
    worst = std::max(worst, std::abs(scheme.best_average(rep.solution, k).first - rep.solution.values[k]));
  rep.max_mv_excess = worst;
  return rep;
}

// ---------------------------------------------------------------------------
// Regularizations.

namespace detail {

// One axis of the exact separable squared-distance transform:
// out[i] = min_k in[k] + ((i - k) h)^2 / (2 eps).
inline void min_plus_quadratic(std::span<const double> in, std::span<double> out, double h, double eps) {
  const std::size_t n = in.size();
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(in[k])) continue;
      const double d = (static_cast<double>(i) - static_cast<double>(k)) * h;
      best = std::min(best, in[k] + d * d / (2.0 * eps));
    }
    out[i] = best;
  }
}

}  // namespace detail

/// u_eps(x) = min over non-Outside nodes y of u(y) + |x - y|^2 / (2 eps). The squared
/// distance splits per axis, so two one-dimensional passes give the exact discrete result.
inline GridFn inf_convolution(const GridFn& u, double eps_c) {
  if (!(eps_c > 0.0)) throw DomainError("inf_convolution: eps must be positive");
  const Grid2& g = *u.grid;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> src(g.size(), inf);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.kind(k) == NodeKind::Outside) continue;
    if (!std::isfinite(u.values[k])) throw DomainError("inf_convolution: non-finite value on the domain");
    src[k] = u.values[k];
  }
  std::vector<double> rows(g.size(), inf);
  parallel_for(static_cast<std::size_t>(g.ny()), [&](std::size_t j) {
    const std::size_t off = j * g.nx();
    detail::min_plus_quadratic(std::span<const double>(src).subspan(off, g.nx()),
                               std::span<double>(rows).subspan(off, g.nx()), g.h(), eps_c);
  });
  GridFn out{u.grid, std::vector<double>(g.size(), std::numeric_limits<double>::quiet_NaN())};
  parallel_for(static_cast<std::size_t>(g.nx()), [&](std::size_t i) {
    std::vector<double> col(g.ny());
    std::vector<double> res(g.ny());
    for (int j = 0; j < g.ny(); ++j) col[j] = rows[g.index(static_cast<int>(i), j)];
    detail::min_plus_quadratic(col, res, g.h(), eps_c);
    for (int j = 0; j < g.ny(); ++j) {
      const std::size_t k = g.index(static_cast<int>(i), j);
      if (g.kind(k) != NodeKind::Outside) out.values[k] = res[j];
    }
  });
  return out;
}

/// u^eps(x) = max over non-Outside nodes y of u(y) - |x - y|^2 / (2 eps).
inline GridFn sup_convolution(const GridFn& u, double eps_c) {
  GridFn neg = u;
  for (auto& v : neg.values) v = -v;
  GridFn out = inf_convolution(neg, eps_c);
  for (auto& v : out.values) v = -v;
  return out;
}

/// Discrete convolution with the bump exp(-1 / (1 - |y / r|^2)) on |y| < r, renormalized
/// to unit mass over the non-Outside nodes it reaches. Interior nodes must see the whole
/// kernel; band nodes near the edge use the truncated kernel.
inline GridFn mollify(const GridFn& u, double radius) {
  const Grid2& g = *u.grid;
  if (!(radius >= 2.0 * g.h() - 1e-12)) throw DomainError("mollify: kernel radius must be >= 2h");
  const int reach = static_cast<int>(std::ceil(radius / g.h()));
  std::vector<std::array<int, 2>> offs;
  std::vector<double> wts;
  for (int b = -reach; b <= reach; ++b) {
    for (int a = -reach; a <= reach; ++a) {
      const double s2 = (a * a + b * b) * g.h() * g.h() / (radius * radius);
      if (s2 < 1.0) {
        offs.push_back({a, b});
        wts.push_back(std::exp(-1.0 / (1.0 - s2)));
      }
    }
  }
  GridFn out{u.grid, std::vector<double>(g.size(), std::numeric_limits<double>::quiet_NaN())};
  bool thin = false;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.kind(k) == NodeKind::Outside) continue;
    const int i = g.col(k);
    const int j = g.row(k);
    double s = 0.0;
    double mass = 0.0;
    for (std::size_t q = 0; q < offs.size(); ++q) {
      const int a = i + offs[q][0];
      const int b = j + offs[q][1];
      if (!g.contains(a, b) || g.kind(a, b) == NodeKind::Outside) {
        if (g.kind(k) == NodeKind::Interior) thin = true;
        continue;
      }
      s += wts[q] * u.values[g.index(a, b)];
      mass += wts[q];
    }
    out.values[k] = s / mass;
  }
  if (thin) throw DomainError("mollify: boundary band too thin for the kernel radius");
  return out;
}

/// x -> f(sqrt(Z) x).
inline std::function<double(std::span<const double>)> pullback_sqrtZ(
    std::function<double(std::span<const double>)> f, const SymMat& Z) {
  const Spectrum s = eigh(Z);
  if (!(s.eigenvalues[0] > 1e-12)) throw DomainError("pullback_sqrtZ: Z is not positive definite");
  const SymMat root = spectral_apply(s, [](double l) { return std::sqrt(l); });
  return [f = std::move(f), root](std::span<const double> x) {
    const int n = root.dim();
    detail::check_same(x.size(), n, "pullback_sqrtZ");
    std::array<double, kMaxDim> y{};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) y[i] += root(i, j) * x[j];
    return f(std::span<const double>(y.data(), static_cast<std::size_t>(n)));
  };
}

}  // namespace sublinop
