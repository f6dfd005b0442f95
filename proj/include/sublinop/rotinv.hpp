#pragma once

// Rotationally invariant sublinear operators, represented by permutation-symmetric
// convex bodies in R^n. Such an operator only sees the eigenvalues of its argument:
// F(X) = max over y in the body of y^T lambda(X).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sublinop/convbody.hpp"
#include "sublinop/error.hpp"
#include "sublinop/symmat.hpp"

namespace sublinop {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// con{P a : P a permutation, a a seed}. Seeds are stored sorted ascending.
struct OrbitHull {
  std::vector<SpecVec> seeds;
};

/// Closed ball of radius delta around the all-ones vector.
struct Ball {
  double delta = 0.0;
};

class RotInvBody {
 public:
  using Shape = std::variant<OrbitHull, Ball>;

  RotInvBody(int n, OrbitHull hull) : n_(n), shape_(canonical(n, std::move(hull))) {}
  RotInvBody(int n, Ball ball) : n_(n), shape_(ball) {
    detail::check_dim(n);
    if (!(ball.delta >= 0.0 && ball.delta <= 1.0)) throw DomainError("ball: delta must lie in [0, 1]");
  }

  static RotInvBody orbit_hull(int n, std::vector<SpecVec> seeds) {
    return RotInvBody(n, OrbitHull{std::move(seeds)});
  }

  /// Pucci body {lambda I <= Y <= Lambda I}: cube vertices up to permutation are the
  /// n+1 step vectors (lambda, ..., lambda, Lambda, ..., Lambda).
  static RotInvBody pucci(int n, double lambda, double Lambda) {
    if (!(lambda >= 0.0 && lambda <= Lambda) || !std::isfinite(Lambda)) {
      throw DomainError("pucci: need 0 <= lambda <= Lambda < inf");
    }
    std::vector<SpecVec> seeds;
    for (int k = 0; k <= n; ++k) {
      SpecVec v(n, lambda);
      for (int i = n - k; i < n; ++i) v[i] = Lambda;
      seeds.push_back(std::move(v));
    }
    return orbit_hull(n, std::move(seeds));
  }

  /// Dominative p-Laplacian, 1 <= p <= inf: seed (1, ..., 1, p-1), or e_n when p = inf.
  static RotInvBody dominative(int n, double p) {
    if (!(p >= 1.0)) throw DomainError("dominative: p must be >= 1");
    SpecVec v = std::isinf(p) ? SpecVec::unit(n, n - 1) : SpecVec::ones(n);
    if (!std::isinf(p)) v[n - 1] = p - 1.0;
    return orbit_hull(n, {v});
  }

  static RotInvBody singleton(int n, SpecVec a) {
    detail::check_same(a.size(), n, "singleton");
    return orbit_hull(n, {std::move(a)});
  }

  static RotInvBody ball(int n, double delta) { return RotInvBody(n, Ball{delta}); }

  int dim() const noexcept { return n_; }
  const Shape& shape() const noexcept { return shape_; }
  const OrbitHull* hull() const noexcept { return std::get_if<OrbitHull>(&shape_); }
  const Ball* as_ball() const noexcept { return std::get_if<Ball>(&shape_); }

  /// Smallest and largest coordinate over the body, i.e. the extreme eigenvalues found
  /// among matrices of the corresponding body in S(n).
  std::pair<double, double> eigen_range() const {
    if (const auto* b = as_ball()) return {1.0 - b->delta, 1.0 + b->delta};
    double lo = kInf;
    double hi = -kInf;
    for (const auto& s : hull()->seeds) {
      lo = std::min(lo, s[0]);
      hi = std::max(hi, s[s.size() - 1]);
    }
    return {lo, hi};
  }

 private:
  static OrbitHull canonical(int n, OrbitHull hull) {
    detail::check_dim(n);
    if (hull.seeds.empty()) throw DomainError("orbit hull: no seeds");
    for (auto& s : hull.seeds) {
      detail::check_same(s.size(), n, "orbit hull seed");
      for (double v : s)
        if (!std::isfinite(v)) throw DomainError("orbit hull: non-finite seed component");
      s = sort_ascending(std::move(s));
    }
    return hull;
  }

  int n_;
  Shape shape_;
};

/// F(X). Over an orbit polytope the maximum sits at a vertex P a, and the best
/// permutation pairs a and lambda(X) in sorted order.
inline double eval(const RotInvBody& body, const SpecVec& spectrum) {
  detail::check_same(body.dim(), spectrum.size(), "eval");
  if (const auto* b = body.as_ball()) return spectrum.sum() + b->delta * spectrum.norm();
  const SpecVec sorted = sort_ascending(spectrum);
  double best = -kInf;
  for (const auto& a : body.hull()->seeds) best = std::max(best, a.dot(sorted));
  return best;
}

inline double eval(const RotInvBody& body, const SymMat& x) {
  detail::check_same(body.dim(), x.dim(), "eval");
  return eval(body, eigenvalues(x));
}

/// Lambda tr X⁺ - lambda tr X⁻.
inline double pucci_eval(double lambda, double Lambda, const SymMat& x) {
  if (!(lambda >= 0.0 && lambda <= Lambda)) throw DomainError("pucci_eval: need 0 <= lambda <= Lambda");
  const TracePair t = positive_part_trace(x);
  return Lambda * t.positive - lambda * t.negative;
}

/// lambda(A)^T lambda(X) for the body generated by the orbit of a single matrix A.
inline double singleton_eval(const SpecVec& a, const SymMat& x) {
  if (!std::is_sorted(a.begin(), a.end())) throw DomainError("singleton_eval: a must be ascending");
  return a.dot(eigenvalues(x));
}

/// Closed form of the dominative p-Laplacian: tr X + (p-2) lambda_max (p >= 2),
/// tr X + (p-2) lambda_min (p < 2), lambda_max (p = inf).
inline double dominative_formula(double p, const SymMat& x) {
  const SpecVec l = eigenvalues(x);
  if (std::isinf(p)) return l[l.size() - 1];
  const double extreme = p >= 2.0 ? l[l.size() - 1] : l[0];
  return l.sum() + (p - 2.0) * extreme;
}

namespace detail {

inline void push_unique(std::vector<SpecVec>& out, SpecVec v, double tol) {
  for (const auto& w : out) {
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) d = std::max(d, std::abs(v[i] - w[i]));
    if (d <= tol) return;
  }
  out.push_back(std::move(v));
}

}  // namespace detail

/// Sorted eigenvalue vectors of the generators, deduplicated within 1e-10. The caller
/// asserts that the generators seed a rotationally symmetric body.
inline RotInvBody phi(const GeneralBody& body) {
  std::vector<SpecVec> seeds;
  for (const auto& g : body.generators()) detail::push_unique(seeds, eigenvalues(g), 1e-10);
  return RotInvBody::orbit_hull(body.dim(), std::move(seeds));
}

inline constexpr int kMaxPermutationDim = 5;

/// Diagonal slice of the body in S(n): diag(P a) for every permutation P and seed a.
inline GeneralBody phi_inv_representative(const RotInvBody& body) {
  const auto* hull = body.hull();
  if (hull == nullptr) throw DomainError("phi_inv_representative: body is not an orbit hull");
  const int n = body.dim();
  if (n > kMaxPermutationDim) throw DimensionError("phi_inv_representative: n > 5");
  std::vector<SpecVec> vectors;
  for (const auto& seed : hull->seeds) {
    SpecVec v = seed;  // sorted, so next_permutation walks the whole orbit
    do {
      detail::push_unique(vectors, v, 1e-10);
    } while (std::next_permutation(v.begin(), v.end()));
  }
  std::vector<SymMat> gens;
  gens.reserve(vectors.size());
  for (const auto& v : vectors) gens.push_back(SymMat::diag(v));
  return GeneralBody(std::move(gens));
}

/// alpha * A + beta * B on orbit hulls: pairwise sums of sorted seeds. The sorted pairing
/// reproduces the support function sum because both summands are maximized by the same
/// sorted permutation.
inline RotInvBody minkowski(double alpha, const RotInvBody& lhs, double beta, const RotInvBody& rhs) {
  detail::check_same(lhs.dim(), rhs.dim(), "minkowski");
  if (lhs.hull() == nullptr || rhs.hull() == nullptr) throw DomainError("minkowski: orbit hulls only");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw DomainError("minkowski: coefficients must be >= 0");
  std::vector<SpecVec> seeds;
  for (const auto& a : lhs.hull()->seeds)
    for (const auto& b : rhs.hull()->seeds) detail::push_unique(seeds, alpha * a + beta * b, 0.0);
  return RotInvBody::orbit_hull(lhs.dim(), std::move(seeds));
}

// ---------------------------------------------------------------------------
// Apertures.

struct ApertureReport {
  double alpha = 0.0;  // solution cone aperture, min tr Z / lambda_max(Z)
  double p = 0.0;      // body cone aperture, (n + alpha - 2) / (alpha - 1); +inf when alpha = 1
  double c = 0.0;      // scaling with c * pvec ≺ argmin
  SpecVec argmin;      // a point of the body attaining alpha
};

inline constexpr double kAlphaOneTol = 1e-12;

/// p dual to alpha: (alpha - 1)(p - 1) = n - 1.
inline double dual_exponent(int n, double alpha) {
  if (alpha <= 1.0 + kAlphaOneTol) return kInf;
  return (n + alpha - 2.0) / (alpha - 1.0);
}

/// (1, ..., 1, p - 1), or e_n when p = inf.
inline SpecVec p_vector(int n, double p) {
  if (std::isinf(p)) return SpecVec::unit(n, n - 1);
  SpecVec v = SpecVec::ones(n);
  v[n - 1] = p - 1.0;
  return v;
}

/// Lambda_alpha eigenvalues (-1, ..., -1, alpha - 1).
inline SpecVec lambda_alpha(int n, double alpha) {
  SpecVec v(n, -1.0);
  v[n - 1] = alpha - 1.0;
  return v;
}

namespace detail {

inline void require_elliptic(const RotInvBody& body) {
  const auto [lo, hi] = body.eigen_range();
  if (lo < -kEllipticityTol) throw DomainError("aperture: body is not elliptic");
  if (hi <= kEllipticityTol) throw DomainError("aperture: trivial body {0}");
}

inline ApertureReport finish_aperture(int n, double alpha, SpecVec z) {
  ApertureReport r;
  r.alpha = alpha;
  r.p = dual_exponent(n, alpha);
  r.c = std::isinf(r.p) ? z.max() : z.sum() / (n + r.p - 2.0);
  r.argmin = std::move(z);
  return r;
}

// Ball body: alpha is the root of g(t) = max over the ball of (t y_max - sum y). For any
// direction v the ball maximum of v^T y is v^T 1 + delta |v|, and by permutation symmetry
// the maximum over y of t y_max - sum y equals that of (t e_n - 1)^T y. g is increasing,
// negative below alpha and zero at alpha, so bisection on [1, n] finds it.
inline ApertureReport ball_aperture(int n, double delta) {
  auto g = [n, delta](double t) {
    return t - n + delta * std::sqrt((t - 1.0) * (t - 1.0) + (n - 1.0));
  };
  double lo = 1.0;
  double hi = static_cast<double>(n);
  if (g(lo) >= 0.0) hi = lo;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  const double alpha = hi;
  SpecVec v = lambda_alpha(n, alpha);  // alpha e_n - 1
  SpecVec z = SpecVec::ones(n);
  const double vn = v.norm();
  if (vn > 0.0) z += (delta / vn) * v;
  return finish_aperture(n, alpha, sort_ascending(std::move(z)));
}

}  // namespace detail

/// Solution and body cone apertures. For orbit hulls the minimum of sum(y)/max(y) is taken
/// at a vertex: the ratio is quasi-concave on the nonnegative orthant, since
/// sum(y) - a max(y) = min_i (sum(y) - a y_i) is concave. Ties go to the first seed.
inline ApertureReport aperture(const RotInvBody& body) {
  detail::require_elliptic(body);
  const int n = body.dim();
  if (const auto* b = body.as_ball()) return detail::ball_aperture(n, b->delta);
  double best = kInf;
  const SpecVec* arg = nullptr;
  for (const auto& a : body.hull()->seeds) {
    const double top = a[a.size() - 1];
    if (top <= 0.0) continue;  // the zero vector does not enter the minimum
    const double ratio = a.sum() / top;
    if (ratio < best) {
      best = ratio;
      arg = &a;
    }
  }
  return detail::finish_aperture(n, std::clamp(best, 1.0, static_cast<double>(n)), *arg);
}

struct DominativeBound {
  double c = 0.0;
  double p = 0.0;
};

/// (c, p) with c F_p <= F. Self-checks c pvec ≺ argmin and the inequality on
/// `spot_checks` deterministic pseudo-random symmetric matrices.
inline DominativeBound minimal_dominative_bound(const RotInvBody& body, int spot_checks = 100) {
  const ApertureReport ap = aperture(body);
  const int n = body.dim();
  const SpecVec cp = ap.c * p_vector(n, ap.p);
  if (!majorizes(cp, ap.argmin, 1e-9)) {
    throw Error("minimal_dominative_bound: c*p is not majorized by the aperture minimizer");
  }
  const RotInvBody dom = RotInvBody::dominative(n, ap.p);
  std::uint64_t state = 0x9E3779B97F4A7C15ULL;
  auto next = [&state] {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return static_cast<double>(state >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  };
  for (int k = 0; k < spot_checks; ++k) {
    std::vector<double> vals(static_cast<std::size_t>(n) * n);
    for (auto& v : vals) v = next();
    const SymMat x(n, vals);
    if (ap.c * eval(dom, x) > eval(body, x) + 1e-9 * (1.0 + frobenius_norm(x))) {
      throw Error("minimal_dominative_bound: c F_p <= F violated");
    }
  }
  return {ap.c, ap.p};
}

}  // namespace sublinop
