#include <gtest/gtest.h>

#include <cmath>

#include "sublinop/convbody.hpp"
#include "sublinop/rotinv.hpp"
#include "test_support.hpp"

using namespace sublinop;
using namespace sublinop::testing;

namespace {

// Closed forms for the ball body around the ones vector in n = 3.
double ball3_c(double d) {
  const double s = 3.0 - d * d;
  return (s - d * std::sqrt(s / 2.0)) / 3.0;
}

double ball3_p(double d) {
  const double s = 3.0 - d * d;
  const double q = std::sqrt(s / 2.0);
  return (s + 2.0 * d * q) / (s - d * q) + 1.0;
}

std::vector<RotInvBody> assorted_bodies(int n) {
  std::vector<RotInvBody> out = {
      RotInvBody::pucci(n, 0.5, 2.0),     RotInvBody::dominative(n, 3.0), RotInvBody::dominative(n, kInf),
      RotInvBody::dominative(n, 1.5),     RotInvBody::ball(n, 0.4),       RotInvBody::singleton(n, SpecVec::ones(n)),
  };
  SpecVec a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i] = i + 1.0;
    b[i] = (i % 2 == 0) ? 2.0 : -0.5;
  }
  out.push_back(RotInvBody::orbit_hull(n, {a, b}));
  return out;
}

}  // namespace

TEST(RotInvBody, CanonicalizesAndValidates) {
  const auto b = RotInvBody::singleton(3, {4.0, 1.0, 3.0});
  EXPECT_EQ(b.hull()->seeds[0], (SpecVec{1.0, 3.0, 4.0}));
  EXPECT_THROW(RotInvBody::ball(2, 1.5), DomainError);
  EXPECT_THROW(RotInvBody::pucci(2, 2.0, 1.0), DomainError);
  EXPECT_THROW(RotInvBody::dominative(2, 0.5), DomainError);
  EXPECT_THROW(RotInvBody::singleton(3, {1.0, 2.0}), DimensionError);
  EXPECT_EQ(RotInvBody::pucci(3, 1.0, 3.0).hull()->seeds.size(), 4u);
}

TEST(Eval, Examples) {
  EXPECT_NEAR(eval(RotInvBody::dominative(2, 4.0), SymMat::diag({1, 2})), 7.0, 1e-12);
  EXPECT_NEAR(eval(RotInvBody::pucci(2, 1.0, 3.0), SymMat::diag({2, -1})), 5.0, 1e-12);
  for (const auto& b : assorted_bodies(3)) EXPECT_EQ(eval(b, SymMat(3)), 0.0);
}

TEST(PucciEval, ExamplesAndOracle) {
  Rng rng(1);
  const SymMat p = random_psd(rng, 3);
  EXPECT_NEAR(pucci_eval(0.5, 2.0, p), 2.0 * trace(p), 1e-12);
  EXPECT_NEAR(pucci_eval(0.5, 2.0, -SymMat::identity(4)), -2.0, 1e-12);
  EXPECT_THROW(pucci_eval(2.0, 1.0, p), DomainError);
  for (int t = 0; t < 300; ++t) {
    const int n = 2 + t % 4;
    const double lo = uniform(rng, 0.0, 2.0);
    const double hi = lo + uniform(rng, 0.0, 2.0);
    const SymMat x = random_sym(rng, n);
    EXPECT_NEAR(pucci_eval(lo, hi, x), eval(RotInvBody::pucci(n, lo, hi), x), 1e-9);
  }
}

TEST(SingletonEval, ExamplesAndOracle) {
  Rng rng(2);
  const SymMat x = random_sym(rng, 3);
  EXPECT_NEAR(singleton_eval(SpecVec::ones(3), x), trace(x), 1e-12);
  EXPECT_NEAR(singleton_eval({1, 3, 4}, SymMat::diag({0, 0, 1})), 4.0, 1e-14);
  EXPECT_THROW(singleton_eval({3, 1, 4}, x), DomainError);
  for (int t = 0; t < 200; ++t) {
    const SymMat y = random_sym(rng, 3);
    EXPECT_NEAR(singleton_eval({1, 3, 4}, y), eval(RotInvBody::singleton(3, {1, 3, 4}), y), 1e-9);
  }
}

TEST(Phi, Examples) {
  const double p = 5.0;
  const SymMat g = SymMat::identity(2) + (p - 2.0) * SymMat::outer(SpecVec::unit(2, 1));
  const RotInvBody k = phi(GeneralBody({g}));
  ASSERT_EQ(k.hull()->seeds.size(), 1u);
  EXPECT_NEAR(k.hull()->seeds[0][0], 1.0, 1e-12);
  EXPECT_NEAR(k.hull()->seeds[0][1], p - 1.0, 1e-12);

  EXPECT_EQ(phi(GeneralBody({SymMat::identity(3)})).hull()->seeds[0], SpecVec::ones(3));

  const GeneralBody proj({SymMat(2), SymMat::outer(SpecVec::unit(2, 0)), SymMat::outer(SpecVec::unit(2, 1)),
                          SymMat::identity(2)});
  const auto seeds = phi(proj).hull()->seeds;
  ASSERT_EQ(seeds.size(), 3u);
  EXPECT_EQ(seeds[0], (SpecVec{0, 0}));
  EXPECT_EQ(seeds[1], (SpecVec{0, 1}));
  EXPECT_EQ(seeds[2], (SpecVec{1, 1}));
}

TEST(PhiInvRepresentative, Examples) {
  const GeneralBody one = phi_inv_representative(RotInvBody::singleton(3, SpecVec::ones(3)));
  ASSERT_EQ(one.generators().size(), 1u);
  EXPECT_EQ(one.generators()[0], SymMat::identity(3));

  const GeneralBody two = phi_inv_representative(RotInvBody::singleton(2, {1, 3}));
  ASSERT_EQ(two.generators().size(), 2u);
  EXPECT_EQ(two.generators()[0], SymMat::diag({1, 3}));
  EXPECT_EQ(two.generators()[1], SymMat::diag({3, 1}));

  EXPECT_THROW(phi_inv_representative(RotInvBody::ball(2, 0.5)), DomainError);
  EXPECT_THROW(phi_inv_representative(RotInvBody::dominative(6, 3.0)), DimensionError);
}

TEST(PhiInvRepresentative, DiagonalSupportMatchesEval) {
  Rng rng(3);
  for (int n = 2; n <= 4; ++n) {
    for (const auto& b : assorted_bodies(n)) {
      if (b.hull() == nullptr) continue;
      const GeneralBody g = phi_inv_representative(b);
      for (int t = 0; t < 50; ++t) {
        const SymMat d = SymMat::diag(random_vec(rng, n));
        EXPECT_NEAR(support(g, d), eval(b, d), 1e-9);
      }
    }
  }
}

TEST(Aperture, Dominative) {
  for (int n = 2; n <= 5; ++n) {
    for (double p0 : {2.0, 3.0, 4.5, 10.0}) {
      const auto ap = aperture(RotInvBody::dominative(n, p0));
      EXPECT_NEAR(ap.alpha, (n + p0 - 2.0) / (p0 - 1.0), 1e-12);
      EXPECT_NEAR(ap.p, p0, 1e-9);
      EXPECT_NEAR(ap.c, 1.0, 1e-12);
    }
    const auto inf = aperture(RotInvBody::dominative(n, kInf));
    EXPECT_EQ(inf.alpha, 1.0);
    EXPECT_TRUE(std::isinf(inf.p));
  }
}

TEST(Aperture, PucciByHand) {
  const auto ap = aperture(RotInvBody::pucci(2, 1.0, 3.0));
  EXPECT_NEAR(ap.alpha, 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(ap.p, 4.0, 1e-12);
  EXPECT_NEAR(ap.c, 1.0, 1e-12);
  EXPECT_EQ(ap.argmin, (SpecVec{1.0, 3.0}));
}

TEST(Aperture, BallMatchesClosedForm) {
  for (double d : {0.1, 0.5, 0.9}) {
    const auto ap = aperture(RotInvBody::ball(3, d));
    EXPECT_NEAR(ap.c, ball3_c(d), 1e-6) << d;
    EXPECT_NEAR(ap.p, ball3_p(d), 1e-6) << d;
  }
  const auto zero = aperture(RotInvBody::ball(3, 0.0));
  EXPECT_NEAR(zero.alpha, 3.0, 1e-12);
}

TEST(Aperture, BallMatchesSphereSampling) {
  // n = 2 and 4 have no closed form here; compare with brute-force sampling of the sphere.
  Rng rng(4);
  std::normal_distribution<double> gauss;
  for (int n : {2, 4}) {
    for (double d : {0.3, 0.8}) {
      const auto ap = aperture(RotInvBody::ball(n, d));
      double best = kInf;
      for (int s = 0; s < 200000; ++s) {
        SpecVec v(n);
        for (auto& x : v) x = gauss(rng);
        const SpecVec y = SpecVec::ones(n) + (d / v.norm()) * v;
        best = std::min(best, y.sum() / y.max());
      }
      EXPECT_LE(ap.alpha, best + 1e-12);
      EXPECT_NEAR(ap.alpha, best, 2e-3);
      EXPECT_NEAR(std::abs((ap.argmin - SpecVec::ones(n)).norm()), d, 1e-12);
    }
  }
}

TEST(Aperture, RejectsNonElliptic) {
  EXPECT_THROW(aperture(RotInvBody::singleton(2, {-1.0, 2.0})), DomainError);
  EXPECT_THROW(aperture(RotInvBody::singleton(2, {0.0, 0.0})), DomainError);
}

TEST(Aperture, VertexMinimumBeatsPolytopeSamples) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 3;
    std::vector<SpecVec> seeds;
    for (int k = 0; k < 3; ++k) seeds.push_back(random_vec(rng, n, 0.0, 2.0));
    const RotInvBody body = RotInvBody::orbit_hull(n, seeds);
    const auto ap = aperture(body);
    const GeneralBody verts = phi_inv_representative(body);
    for (int s = 0; s < 1000; ++s) {
      const auto w = random_simplex(rng, verts.generators().size());
      SpecVec y(n);
      for (std::size_t k = 0; k < w.size(); ++k) y += w[k] * diag_of(verts.generators()[k]);
      EXPECT_GE(y.sum() / y.max(), ap.alpha - 1e-9);
    }
  }
}

TEST(MinimalDominativeBound, Examples) {
  const auto flat = minimal_dominative_bound(RotInvBody::singleton(3, {1, 3, 4}));
  EXPECT_NEAR(flat.p, 3.0, 1e-12);
  EXPECT_NEAR(flat.c, 2.0, 1e-12);
  const auto dom = minimal_dominative_bound(RotInvBody::dominative(3, 6.0));
  EXPECT_NEAR(dom.c, 1.0, 1e-12);
  EXPECT_NEAR(dom.p, 6.0, 1e-12);

  const auto pu = minimal_dominative_bound(RotInvBody::pucci(2, 1.0, 3.0));
  EXPECT_NEAR(pu.c, 1.0, 1e-12);
  EXPECT_NEAR(pu.p, 4.0, 1e-12);
  Rng rng(6);
  for (int t = 0; t < 500; ++t) {
    const SymMat x = random_sym(rng, 2, 3.0);
    EXPECT_LE(pu.c * dominative_formula(pu.p, x), pucci_eval(1.0, 3.0, x) + 1e-9);
  }
}

TEST(MinimalDominativeBound, MajorizationWitness) {
  for (double d : {0.1, 0.5, 0.9}) {
    const auto body = RotInvBody::ball(3, d);
    const auto ap = aperture(body);
    EXPECT_TRUE(majorizes(ap.c * p_vector(3, ap.p), ap.argmin, 1e-9));
    EXPECT_NO_THROW(minimal_dominative_bound(body));
  }
}

// Property suites.

TEST(Properties, RotationalInvariance) {
  Rng rng(7);
  for (int n = 2; n <= 5; ++n) {
    for (const auto& b : assorted_bodies(n)) {
      for (int t = 0; t < 30; ++t) {
        const SymMat x = random_sym(rng, n);
        const SymMat y = SymMat::conjugate(random_orthogonal(rng, n), x);
        EXPECT_NEAR(eval(b, y), eval(b, x), 1e-8);
      }
    }
  }
}

TEST(Properties, PhiRoundTrip) {
  for (int n = 2; n <= 4; ++n) {
    for (const auto& b : assorted_bodies(n)) {
      if (b.hull() == nullptr) continue;
      const auto back = phi(phi_inv_representative(b)).hull()->seeds;
      const auto& orig = b.hull()->seeds;
      // every original seed reappears, and nothing else does
      for (const auto& s : orig) {
        bool found = false;
        for (const auto& t : back) found = found || (s - t).norm() <= 1e-10;
        EXPECT_TRUE(found);
      }
      for (const auto& t : back) {
        bool found = false;
        for (const auto& s : orig) found = found || (s - t).norm() <= 1e-10;
        EXPECT_TRUE(found);
      }
    }
  }
}

TEST(Properties, MinkowskiCompatibleWithGeneralBodies) {
  Rng rng(8);
  for (int n = 2; n <= 4; ++n) {
    const RotInvBody a = RotInvBody::pucci(n, 0.5, 2.0);
    const RotInvBody b = RotInvBody::orbit_hull(n, {random_vec(rng, n), random_vec(rng, n)});
    const double ca = 1.5, cb = 0.7;
    const RotInvBody s = minkowski(ca, a, cb, b);
    const GeneralBody gs = minkowski(ca, phi_inv_representative(a), cb, phi_inv_representative(b));
    for (int t = 0; t < 100; ++t) {
      const SymMat d = SymMat::diag(random_vec(rng, n));
      EXPECT_NEAR(eval(s, d), support(gs, d), 1e-9);
      const SymMat x = random_sym(rng, n);
      EXPECT_NEAR(eval(s, x), ca * eval(a, x) + cb * eval(b, x), 1e-9);
    }
  }
}

TEST(Properties, DominativeDecompositionIsExact) {
  Rng rng(9);
  for (int n = 2; n <= 5; ++n) {
    for (double p : {2.0, 3.0, 7.5}) {
      const RotInvBody k = minkowski(1.0, RotInvBody::singleton(n, SpecVec::ones(n)), p - 2.0,
                                     RotInvBody::dominative(n, kInf));
      const RotInvBody d = RotInvBody::dominative(n, p);
      for (int t = 0; t < 50; ++t) {
        const SymMat x = random_sym(rng, n);
        EXPECT_EQ(eval(k, x), eval(d, x));
      }
    }
  }
}

TEST(Properties, DominativeFormulaIncludingSubQuadratic) {
  Rng rng(10);
  for (int t = 0; t < 500; ++t) {
    const int n = 2 + t % 4;
    const double p = t % 5 == 0 ? kInf : uniform(rng, 1.0, 12.0);
    const SymMat x = random_sym(rng, n);
    EXPECT_NEAR(eval(RotInvBody::dominative(n, p), x), dominative_formula(p, x), 1e-9);
  }
}

TEST(Properties, ApertureRangeAndDuality) {
  Rng rng(11);
  for (int n = 2; n <= 5; ++n) {
    EXPECT_DOUBLE_EQ(aperture(RotInvBody::singleton(n, SpecVec::ones(n))).alpha, n);
    for (int t = 0; t < 20; ++t) {
      const RotInvBody b = RotInvBody::orbit_hull(n, {random_vec(rng, n, 0.0, 3.0), random_vec(rng, n, 0.1, 3.0)});
      const auto ap = aperture(b);
      EXPECT_GE(ap.alpha, 1.0);
      EXPECT_LE(ap.alpha, n);
      if (!std::isinf(ap.p)) {
        EXPECT_NEAR((ap.alpha - 1.0) * (ap.p - 1.0), n - 1.0, 1e-9);
      }
      EXPECT_GE(ap.p, 2.0 - 1e-12);
      EXPECT_TRUE(majorizes(ap.c * p_vector(n, ap.p), ap.argmin, 1e-9));
    }
  }
}

TEST(Properties, NestingChain) {
  for (int n : {2, 3}) {
    auto scaled = [n](double p) {
      const GeneralBody k = phi_inv_representative(RotInvBody::dominative(n, p));
      const double s = std::isinf(p) ? 1.0 : 1.0 / (n + p - 2.0);
      return minkowski(s, k, 0.0, k);
    };
    for (auto [p, q] : {std::pair{2.0, 3.0}, std::pair{3.0, 10.0}}) {
      EXPECT_TRUE(nested_cones(scaled(2.0), scaled(p)));
      EXPECT_TRUE(nested_cones(scaled(p), scaled(q)));
      EXPECT_TRUE(nested_cones(scaled(q), scaled(kInf)));
      const auto rev = nesting_report(scaled(q), scaled(p));
      EXPECT_FALSE(rev.nested);
      EXPECT_GT(rev.residual, 0.0);
    }
  }
}
