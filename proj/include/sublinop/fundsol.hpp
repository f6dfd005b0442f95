#pragma once

// Radial fundamental solutions w_{n,p} and their Hessians, plus a residual check that
// F(H w) vanishes away from the origin for a rotationally invariant operator F.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sublinop/error.hpp"
#include "sublinop/rotinv.hpp"
#include "sublinop/symmat.hpp"

namespace sublinop {

inline constexpr double kLogBranchTol = 1e-9;

class FundamentalSolution {
 public:
  FundamentalSolution(int n, double p) : n_(n), p_(p) {
    if (n < 2) throw DimensionError("fundamental solution: n must be >= 2");
    if (!(p >= 2.0)) throw DomainError("fundamental solution: p must lie in [2, inf]");
  }

  int dim() const noexcept { return n_; }
  double p() const noexcept { return p_; }
  bool is_log() const noexcept { return !std::isinf(p_) && std::abs(p_ - n_) <= kLogBranchTol; }

  /// Dual aperture: (alpha - 1)(p - 1) = n - 1, alpha = 1 for p = inf.
  double alpha() const noexcept {
    return std::isinf(p_) ? 1.0 : 1.0 + (n_ - 1.0) / (p_ - 1.0);
  }

  /// W(r) with w(x) = W(|x|). r = 0 gives the pole value (+inf when p <= n).
  double radial(double r) const {
    if (std::isinf(p_)) return -r;
    if (is_log()) return r == 0.0 ? kInf : -std::log(r);
    const double expo = (p_ - n_) / (p_ - 1.0);
    if (r == 0.0) return p_ < n_ ? kInf : 0.0;
    return -(p_ - 1.0) / (p_ - n_) * std::pow(r, expo);
  }

  double value(std::span<const double> x) const {
    detail::check_same(x.size(), n_, "fundamental solution value");
    return radial(norm(x));
  }

  /// r^{-alpha} ((alpha - 1) x̂x̂^T - (I - x̂x̂^T)).
  SymMat hessian(std::span<const double> x) const {
    detail::check_same(x.size(), n_, "fundamental solution hessian");
    const double r = norm(x);
    if (r == 0.0) throw DomainError("fundamental solution hessian: x = 0");
    const double a = alpha();
    SpecVec xhat(n_);
    for (int i = 0; i < n_; ++i) xhat[i] = x[i] / r;
    const SymMat radial_proj = SymMat::outer(xhat);
    const SymMat tangential = SymMat::identity(n_) - radial_proj;
    return std::pow(r, -a) * ((a - 1.0) * radial_proj - tangential);
  }

 private:
  static double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
  }

  int n_;
  double p_;
};

struct FundamentalCheck {
  double p = 0.0;
  double alpha = 0.0;
  double max_residual = 0.0;     // max |F(H w(x))| over the samples
  double max_scaled_spread = 0.0;  // max over samples of | |x|^alpha F(H w(x)) - F(Lambda_alpha) |
  double at_lambda_alpha = 0.0;  // F(diag(-1, ..., -1, alpha - 1))
};

/// Samples points with radius uniform in [0.1, 10] and isotropic direction.
inline FundamentalCheck verify_fundamental(const RotInvBody& body, int samples, std::uint64_t seed) {
  const ApertureReport ap = aperture(body);
  const int n = body.dim();
  const FundamentalSolution w(n, ap.p);
  FundamentalCheck out;
  out.p = ap.p;
  out.alpha = w.alpha();
  out.at_lambda_alpha = eval(body, lambda_alpha(n, out.alpha));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> radius(0.1, 10.0);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int s = 0; s < samples; ++s) {
    double nrm = 0.0;
    do {
      nrm = 0.0;
      for (auto& v : x) {
        v = gauss(rng);
        nrm += v * v;
      }
    } while (nrm < 1e-12);
    const double r = radius(rng);
    for (auto& v : x) v *= r / std::sqrt(nrm);
    const double res = eval(body, w.hessian(x));
    out.max_residual = std::max(out.max_residual, std::abs(res));
    out.max_scaled_spread =
        std::max(out.max_scaled_spread, std::abs(std::pow(r, out.alpha) * res - out.at_lambda_alpha));
  }
  return out;
}

}  // namespace sublinop
