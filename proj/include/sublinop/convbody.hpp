#pragma once

// Convex bodies in S(n) given as convex hulls of finitely many generators: support
// function, Minkowski algebra, ellipticity and non-degeneracy tests, and body-cone
// membership.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "sublinop/error.hpp"
#include "sublinop/symmat.hpp"

namespace sublinop {

/// K = con(generators). Redundant generators are allowed and kept.
class GeneralBody {
 public:
  explicit GeneralBody(std::vector<SymMat> generators) : gens_(std::move(generators)) {
    if (gens_.empty()) throw DomainError("GeneralBody: empty generator list");
    for (const auto& g : gens_) detail::check_same(g.dim(), gens_.front().dim(), "GeneralBody");
  }

  int dim() const noexcept { return gens_.front().dim(); }
  const std::vector<SymMat>& generators() const noexcept { return gens_; }

 private:
  std::vector<SymMat> gens_;
};

/// F(X) = max over the hull of <Y, X>, attained at a generator.
inline double support(const GeneralBody& body, const SymMat& x) {
  detail::check_same(body.dim(), x.dim(), "support");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& g : body.generators()) best = std::max(best, inner(g, x));
  return best;
}

/// a*A + b*B with a, b >= 0, generated by all pairwise sums.
inline GeneralBody minkowski(double a, const GeneralBody& lhs, double b, const GeneralBody& rhs) {
  detail::check_same(lhs.dim(), rhs.dim(), "minkowski");
  if (!(a >= 0.0) || !(b >= 0.0)) throw DomainError("minkowski: coefficients must be >= 0");
  std::vector<SymMat> out;
  out.reserve(lhs.generators().size() * rhs.generators().size());
  for (const auto& g : lhs.generators())
    for (const auto& h : rhs.generators()) out.push_back(a * g + b * h);
  return GeneralBody(std::move(out));
}

inline GeneralBody negate(const GeneralBody& body) {
  std::vector<SymMat> out;
  out.reserve(body.generators().size());
  for (const auto& g : body.generators()) out.push_back(-g);
  return GeneralBody(std::move(out));
}

enum class Ellipticity { NotElliptic, DegenerateElliptic, UniformlyElliptic };

inline const char* to_string(Ellipticity e) {
  switch (e) {
    case Ellipticity::NotElliptic: return "not_elliptic";
    case Ellipticity::DegenerateElliptic: return "degenerate";
    case Ellipticity::UniformlyElliptic: return "uniform";
  }
  return "?";
}

struct EllipticityClass {
  Ellipticity tag = Ellipticity::NotElliptic;
  double lambda = 0.0;  // smallest eigenvalue found in the body, clamped at 0
  double Lambda = 0.0;  // largest eigenvalue found in the body, clamped at 0
};

inline constexpr double kEllipticityTol = 1e-10;

/// Classifies from the extreme eigenvalues over all generators. PSD (PD) matrices form a
/// convex set, so the hull inherits the generators' definiteness.
inline EllipticityClass classify_eigen_range(double min_eig, double max_eig) {
  EllipticityClass out;
  if (min_eig > kEllipticityTol) out.tag = Ellipticity::UniformlyElliptic;
  else if (min_eig >= -kEllipticityTol) out.tag = Ellipticity::DegenerateElliptic;
  out.lambda = std::max(min_eig, 0.0);
  out.Lambda = std::max(max_eig, 0.0);
  return out;
}

inline EllipticityClass classify_ellipticity(const GeneralBody& body) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& g : body.generators()) {
    const SpecVec l = eigenvalues(g);
    lo = std::min(lo, l[0]);
    hi = std::max(hi, l[l.size() - 1]);
  }
  return classify_eigen_range(lo, hi);
}

/// Comparison-principle condition F(-I) < 0, i.e. 0 is not in K. A linear functional
/// attains its minimum over a hull at a generator, so min tr G over generators decides it.
inline bool nondegenerate(const GeneralBody& body) {
  double min_trace = std::numeric_limits<double>::infinity();
  for (const auto& g : body.generators()) min_trace = std::min(min_trace, trace(g));
  return min_trace > kEllipticityTol;
}

// ---------------------------------------------------------------------------
// Nonnegative least squares (Lawson-Hanson active set).

struct NnlsResult {
  Eigen::VectorXd x;
  double residual = 0.0;  // ||A x - b||
  int iterations = 0;
};

/// min ||A x - b|| subject to x >= 0. Terminates when the projected gradient over the
/// active set falls below grad_tol (scaled by ||A||_max * (1 + ||b||)).
inline NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                       double grad_tol = 1e-12) {
  const Eigen::Index m = a.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  std::vector<bool> passive(static_cast<std::size_t>(m), false);
  const double scale = (a.cwiseAbs().maxCoeff() + 1e-300) * (1.0 + b.norm());
  const double tol = grad_tol * scale;
  const int max_outer = static_cast<int>(3 * m + 30);

  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < m; ++j)
      if (passive[j]) idx.push_back(j);
    z = Eigen::VectorXd::Zero(m);
    if (idx.empty()) return;
    Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
    const Eigen::VectorXd zs = sub.colPivHouseholderQr().solve(b);
    for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zs(static_cast<Eigen::Index>(k));
  };

  int it = 0;
  for (; it < max_outer; ++it) {
    const Eigen::VectorXd w = a.transpose() * (b - a * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!passive[j] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[best] = true;

    Eigen::VectorXd z;
    for (int inner_it = 0; inner_it < 3 * m + 30; ++inner_it) {
      solve_passive(z);
      bool feasible = true;
      for (Eigen::Index j = 0; j < m; ++j)
        if (passive[j] && z(j) <= 0.0) feasible = false;
      if (feasible) break;
      double step = 1.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[j] && z(j) <= 0.0) {
          const double denom = x(j) - z(j);
          if (denom > 0.0) step = std::min(step, x(j) / denom);
        }
      }
      x += step * (z - x);
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[j] && x(j) <= 1e-15 * (1.0 + std::abs(z(j)))) {
          passive[j] = false;
          x(j) = 0.0;
        }
      }
    }
    for (Eigen::Index j = 0; j < m; ++j) x(j) = passive[j] ? std::max(z(j), 0.0) : 0.0;
  }
  return NnlsResult{x, (a * x - b).norm(), it};
}

/// Coordinates of X in R^{n(n+1)/2} under which the Euclidean norm is the Frobenius norm.
inline Eigen::VectorXd svec(const SymMat& x) {
  const int n = x.dim();
  Eigen::VectorXd v(n * (n + 1) / 2);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    v(k++) = x(i, i);
    for (int j = i + 1; j < n; ++j) v(k++) = std::sqrt(2.0) * x(i, j);
  }
  return v;
}

inline constexpr double kConeTol = 1e-8;

struct ConeMembershipReport {
  bool inside = false;
  double residual = 0.0;        // min over t >= 0 of ||sum t_i G_i - X||
  std::vector<double> weights;  // the minimizing t
};

/// Membership of X in the body cone C_K = {tZ : Z in K, t >= 0}, decided by nonnegative
/// least squares against the generators: inside iff residual <= kConeTol * (1 + ||X||).
inline ConeMembershipReport cone_contains(const GeneralBody& body, const SymMat& x) {
  detail::check_same(body.dim(), x.dim(), "cone_contains");
  const auto& gens = body.generators();
  const int n = body.dim();
  Eigen::MatrixXd a(n * (n + 1) / 2, static_cast<Eigen::Index>(gens.size()));
  for (std::size_t j = 0; j < gens.size(); ++j) a.col(static_cast<Eigen::Index>(j)) = svec(gens[j]);
  const NnlsResult r = nnls(a, svec(x));
  ConeMembershipReport out;
  out.residual = r.residual;
  out.inside = r.residual <= kConeTol * (1.0 + frobenius_norm(x));
  out.weights.assign(r.x.data(), r.x.data() + r.x.size());
  return out;
}

struct NestingReport {
  bool nested = true;
  std::optional<std::size_t> offending_generator;  // first generator of F outside C_{K_G}
  double residual = 0.0;                           // its conic residual
};

/// C_{K_F} ⊆ C_{K_G}: a generated cone sits inside a convex cone iff its generators do.
inline NestingReport nesting_report(const GeneralBody& f, const GeneralBody& g) {
  detail::check_same(f.dim(), g.dim(), "nested_cones");
  NestingReport out;
  for (std::size_t i = 0; i < f.generators().size(); ++i) {
    const auto r = cone_contains(g, f.generators()[i]);
    if (!r.inside) {
      out.nested = false;
      out.offending_generator = i;
      out.residual = r.residual;
      return out;
    }
  }
  return out;
}

inline bool nested_cones(const GeneralBody& f, const GeneralBody& g) {
  return nesting_report(f, g).nested;
}

}  // namespace sublinop
