#pragma once

// Dense kernel for the space S(n) of real symmetric n x n matrices, 2 <= n <= 8,
// together with the spectral and majorization utilities built on top of it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sublinop/error.hpp"

namespace sublinop {

inline constexpr int kMinDim = 2;
inline constexpr int kMaxDim = 8;

namespace detail {

inline void check_dim(int n) {
  if (n < kMinDim || n > kMaxDim) {
    throw DimensionError("dimension " + std::to_string(n) + " outside [2, 8]");
  }
}

inline void check_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

}  // namespace detail

/// A real vector of length n: an eigenvalue vector or a point of a body in R^n.
class SpecVec {
 public:
  SpecVec() = default;
  explicit SpecVec(std::size_t n, double fill = 0.0) : v_(n, fill) {}
  SpecVec(std::initializer_list<double> values) : v_(values) {}
  explicit SpecVec(std::vector<double> values) : v_(std::move(values)) {}

  static SpecVec ones(std::size_t n) { return SpecVec(n, 1.0); }
  static SpecVec unit(std::size_t n, std::size_t i) {
    SpecVec e(n);
    e[i] = 1.0;
    return e;
  }

  std::size_t size() const noexcept { return v_.size(); }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  auto begin() noexcept { return v_.begin(); }
  auto end() noexcept { return v_.end(); }
  auto begin() const noexcept { return v_.begin(); }
  auto end() const noexcept { return v_.end(); }
  const std::vector<double>& values() const noexcept { return v_; }

  double sum() const { return std::accumulate(v_.begin(), v_.end(), 0.0); }
  double max() const { return *std::max_element(v_.begin(), v_.end()); }
  double min() const { return *std::min_element(v_.begin(), v_.end()); }
  double dot(const SpecVec& o) const {
    detail::check_same(size(), o.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += v_[i] * o.v_[i];
    return s;
  }
  double norm() const { return std::sqrt(dot(*this)); }

  SpecVec& operator+=(const SpecVec& o) {
    detail::check_same(size(), o.size(), "SpecVec +");
    for (std::size_t i = 0; i < size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  SpecVec& operator-=(const SpecVec& o) {
    detail::check_same(size(), o.size(), "SpecVec -");
    for (std::size_t i = 0; i < size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  SpecVec& operator*=(double t) {
    for (auto& x : v_) x *= t;
    return *this;
  }
  friend SpecVec operator+(SpecVec a, const SpecVec& b) { return a += b; }
  friend SpecVec operator-(SpecVec a, const SpecVec& b) { return a -= b; }
  friend SpecVec operator*(double t, SpecVec a) { return a *= t; }
  friend SpecVec operator*(SpecVec a, double t) { return a *= t; }
  friend bool operator==(const SpecVec&, const SpecVec&) = default;

 private:
  std::vector<double> v_;
};

/// Square n x n matrix, not necessarily symmetric (eigenframes, rotations, permutations).
class SquareMat {
 public:
  SquareMat() = default;
  explicit SquareMat(int n) : n_(n) {
    detail::check_dim(n);
    a_.fill(0.0);
  }
  static SquareMat identity(int n) {
    SquareMat m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  /// Permutation matrix with rows e_{perm[0]}, ..., e_{perm[n-1]}, so (P x)_i = x_{perm[i]}.
  static SquareMat permutation(std::span<const int> perm) {
    SquareMat m(static_cast<int>(perm.size()));
    for (int i = 0; i < m.n_; ++i) m(i, perm[i]) = 1.0;
    return m;
  }

  int dim() const noexcept { return n_; }
  double& operator()(int i, int j) { return a_[i * kMaxDim + j]; }
  double operator()(int i, int j) const { return a_[i * kMaxDim + j]; }

  SquareMat transpose() const {
    SquareMat t(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) t(i, j) = (*this)(j, i);
    return t;
  }
  friend SquareMat operator*(const SquareMat& a, const SquareMat& b) {
    detail::check_same(a.n_, b.n_, "matrix product");
    SquareMat c(a.n_);
    for (int i = 0; i < a.n_; ++i)
      for (int k = 0; k < a.n_; ++k)
        for (int j = 0; j < a.n_; ++j) c(i, j) += a(i, k) * b(k, j);
    return c;
  }
  SpecVec apply(const SpecVec& x) const {
    detail::check_same(n_, x.size(), "matrix-vector product");
    SpecVec y(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

 private:
  int n_ = 0;
  std::array<double, kMaxDim * kMaxDim> a_{};
};

/// Element of S(n). Entries are symmetrized on construction and must be finite.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(int n) : n_(n) {
    detail::check_dim(n);
    a_.fill(0.0);
  }
  /// Builds from n*n row-major values; the result is (A + A^T)/2.
  SymMat(int n, std::span<const double> row_major) : SymMat(n) {
    detail::check_same(row_major.size(), static_cast<std::size_t>(n) * n, "SymMat from values");
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double v = 0.5 * (row_major[i * n + j] + row_major[j * n + i]);
        if (!std::isfinite(v)) throw DomainError("SymMat: non-finite entry");
        set(i, j, v);
      }
    }
  }
  SymMat(int n, std::initializer_list<double> row_major)
      : SymMat(n, std::span<const double>(row_major.begin(), row_major.size())) {}

  static SymMat identity(int n) {
    SymMat m(n);
    for (int i = 0; i < n; ++i) m.set(i, i, 1.0);
    return m;
  }
  static SymMat diag(const SpecVec& x) {
    SymMat m(static_cast<int>(x.size()));
    for (int i = 0; i < m.n_; ++i) m.set(i, i, x[i]);
    return m;
  }
  /// Rank-one matrix x x^T.
  static SymMat outer(const SpecVec& x) {
    SymMat m(static_cast<int>(x.size()));
    for (int i = 0; i < m.n_; ++i)
      for (int j = i; j < m.n_; ++j) m.set(i, j, x[i] * x[j]);
    return m;
  }
  /// Q X Q^T, symmetrized.
  static SymMat conjugate(const SquareMat& q, const SymMat& x) {
    detail::check_same(q.dim(), x.dim(), "conjugate");
    const int n = x.dim();
    SquareMat qx(n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) qx(i, j) += q(i, k) * x(k, j);
    SymMat out(n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += qx(i, k) * q(j, k);
        double t = 0.0;
        for (int k = 0; k < n; ++k) t += qx(j, k) * q(i, k);
        out.set(i, j, 0.5 * (s + t));
      }
    }
    return out;
  }

  int dim() const noexcept { return n_; }
  double operator()(int i, int j) const { return a_[i * kMaxDim + j]; }
  void set(int i, int j, double v) {
    a_[i * kMaxDim + j] = v;
    a_[j * kMaxDim + i] = v;
  }
  std::vector<double> row_major() const {
    std::vector<double> out(static_cast<std::size_t>(n_) * n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) out[i * n_ + j] = (*this)(i, j);
    return out;
  }
  SquareMat as_square() const {
    SquareMat s(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) s(i, j) = (*this)(i, j);
    return s;
  }

  SymMat& operator+=(const SymMat& o) {
    detail::check_same(n_, o.n_, "SymMat +");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  SymMat& operator-=(const SymMat& o) {
    detail::check_same(n_, o.n_, "SymMat -");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  SymMat& operator*=(double t) {
    for (auto& x : a_) x *= t;
    return *this;
  }
  friend SymMat operator+(SymMat a, const SymMat& b) { return a += b; }
  friend SymMat operator-(SymMat a, const SymMat& b) { return a -= b; }
  friend SymMat operator-(SymMat a) { return a *= -1.0; }
  friend SymMat operator*(double t, SymMat a) { return a *= t; }
  friend SymMat operator*(SymMat a, double t) { return a *= t; }
  friend bool operator==(const SymMat& a, const SymMat& b) {
    return a.n_ == b.n_ && a.a_ == b.a_;
  }

 private:
  int n_ = 0;
  std::array<double, kMaxDim * kMaxDim> a_{};
};

/// Ascending eigenvalues with the matching orthonormal eigenvectors as columns of `frame`.
struct Spectrum {
  SpecVec eigenvalues;
  SquareMat frame;
};

inline double trace(const SymMat& x) {
  double s = 0.0;
  for (int i = 0; i < x.dim(); ++i) s += x(i, i);
  return s;
}

/// <X, Y> = tr(XY).
inline double inner(const SymMat& x, const SymMat& y) {
  detail::check_same(x.dim(), y.dim(), "inner");
  double s = 0.0;
  for (int i = 0; i < x.dim(); ++i)
    for (int j = 0; j < x.dim(); ++j) s += x(i, j) * y(j, i);
  return s;
}

inline double frobenius_norm(const SymMat& x) { return std::sqrt(inner(x, x)); }

inline SpecVec diag_of(const SymMat& x) {
  SpecVec d(x.dim());
  for (int i = 0; i < x.dim(); ++i) d[i] = x(i, i);
  return d;
}

inline constexpr int kJacobiSweepCap = 100;

/// Cyclic Jacobi eigendecomposition. Stops once the off-diagonal Frobenius mass drops
/// below 1e-12 * ||X||; throws ConvergenceError after kJacobiSweepCap sweeps.
inline Spectrum eigh(const SymMat& x) {
  const int n = x.dim();
  detail::check_dim(n);
  std::array<double, kMaxDim * kMaxDim> a{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * kMaxDim + j] = x(i, j);
  auto at = [&a](int i, int j) -> double& { return a[i * kMaxDim + j]; };
  SquareMat v = SquareMat::identity(n);

  const double threshold = 1e-12 * frobenius_norm(x);
  auto off_norm = [&] {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) s += at(i, j) * at(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  double off = off_norm();
  for (; off > threshold && sweep < kJacobiSweepCap; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        at(p, q) = 0.0;
        at(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    off = off_norm();
  }
  if (off > threshold) {
    throw ConvergenceError("eigh: Jacobi iteration did not converge", off);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return at(i, i) < at(j, j); });
  Spectrum out{SpecVec(n), SquareMat(n)};
  for (int k = 0; k < n; ++k) {
    out.eigenvalues[k] = at(order[k], order[k]);
    for (int i = 0; i < n; ++i) out.frame(i, k) = v(i, order[k]);
  }
  return out;
}

inline SpecVec eigenvalues(const SymMat& x) { return eigh(x).eigenvalues; }

/// frame * diag(f(lambda)) * frame^T.
template <typename Fn>
SymMat spectral_apply(const Spectrum& s, Fn&& f) {
  SpecVec mapped = s.eigenvalues;
  for (auto& l : mapped) l = f(l);
  return SymMat::conjugate(s.frame, SymMat::diag(mapped));
}

/// max(|lambda_1|, |lambda_n|).
inline double operator_norm(const SymMat& x) {
  const SpecVec l = eigenvalues(x);
  return std::max(std::abs(l[0]), std::abs(l[l.size() - 1]));
}

inline SpecVec sort_ascending(SpecVec x) {
  std::sort(x.begin(), x.end());
  return x;
}

/// True iff x is majorized by y (x ≺ y): equal totals and, for the sorted vectors, every
/// tail sum of x is at most the matching tail sum of y. Comparisons are relative to
/// rel_tol * (1 + |sum y|).
inline bool majorizes(const SpecVec& x, const SpecVec& y, double rel_tol = 1e-10) {
  detail::check_same(x.size(), y.size(), "majorizes");
  const SpecVec xs = sort_ascending(x);
  const SpecVec ys = sort_ascending(y);
  double scale = 0.0;
  for (double v : ys) scale += std::abs(v);
  const double tol = rel_tol * (1.0 + scale);
  if (std::abs(xs.sum() - ys.sum()) > tol) return false;
  double tail_x = 0.0;
  double tail_y = 0.0;
  for (std::size_t k = xs.size(); k-- > 1;) {
    tail_x += xs[k];
    tail_y += ys[k];
    if (tail_x > tail_y + tol) return false;
  }
  return true;
}

/// (x↑)^T y↑, the largest value of x^T P y over permutations P.
inline double rearrangement_max(const SpecVec& x, const SpecVec& y) {
  detail::check_same(x.size(), y.size(), "rearrangement_max");
  return sort_ascending(x).dot(sort_ascending(y));
}

struct TracePair {
  double positive;  // tr X⁺
  double negative;  // tr X⁻
};

inline TracePair positive_part_trace(const SymMat& x) {
  TracePair out{0.0, 0.0};
  for (double l : eigenvalues(x)) {
    if (l > 0.0) out.positive += l;
    else out.negative -= l;
  }
  return out;
}

/// Smallest eigenvalue of Y - X, i.e. the margin in X <= Y.
inline double order_margin(const SymMat& x, const SymMat& y) { return eigenvalues(y - x)[0]; }

}  // namespace sublinop
