#include <gtest/gtest.h>

#include "sublinop/convbody.hpp"
#include "sublinop/rotinv.hpp"
#include "test_support.hpp"

using namespace sublinop;
using namespace sublinop::testing;

namespace {

GeneralBody pucci_vertices_2d() {
  return GeneralBody({SymMat::diag({1, 1}), SymMat::diag({1, 3}), SymMat::diag({3, 1}), SymMat::diag({3, 3})});
}

GeneralBody k_infinity_vertices(int n) {
  std::vector<SymMat> g;
  for (int i = 0; i < n; ++i) g.push_back(SymMat::outer(SpecVec::unit(n, i)));
  return GeneralBody(std::move(g));
}

GeneralBody random_body(Rng& rng, int n, int count, bool psd) {
  std::vector<SymMat> g;
  for (int k = 0; k < count; ++k) g.push_back(psd ? random_psd(rng, n) : random_sym(rng, n));
  return GeneralBody(std::move(g));
}

}  // namespace

TEST(GeneralBody, RejectsEmptyAndMixedDimensions) {
  EXPECT_THROW(GeneralBody({}), DomainError);
  EXPECT_THROW(GeneralBody({SymMat(2), SymMat(3)}), DimensionError);
}

TEST(Support, Examples) {
  Rng rng(1);
  const SymMat x = random_sym(rng, 3);
  EXPECT_NEAR(support(GeneralBody({SymMat::identity(3)}), x), trace(x), 1e-14);
  // <G, diag(2,-1)> over the four vertices: 1, -1, 5, 3
  EXPECT_DOUBLE_EQ(support(pucci_vertices_2d(), SymMat::diag({2, -1})), 5.0);
  EXPECT_EQ(support(pucci_vertices_2d(), SymMat(2)), 0.0);
  EXPECT_THROW(support(pucci_vertices_2d(), SymMat(3)), DimensionError);
}

TEST(Support, HullPointsNeverBeatGenerators) {
  Rng rng(2);
  const GeneralBody body = random_body(rng, 3, 6, false);
  for (int t = 0; t < 100; ++t) {
    const SymMat x = random_sym(rng, 3);
    const auto w = random_simplex(rng, body.generators().size());
    SymMat y(3);
    for (std::size_t k = 0; k < w.size(); ++k) y += w[k] * body.generators()[k];
    EXPECT_LE(inner(y, x), support(body, x) + 1e-12);
  }
}

TEST(Minkowski, DominativeFromLaplacianPlusKInfinity) {
  const int n = 3;
  const double p = 5.0;
  const GeneralBody kp = minkowski(1.0, GeneralBody({SymMat::identity(n)}), p - 2.0, k_infinity_vertices(n));
  ASSERT_EQ(kp.generators().size(), 3u);
  for (int i = 0; i < n; ++i) {
    SpecVec d = SpecVec::ones(n);
    d[i] = p - 1.0;
    EXPECT_EQ(kp.generators()[i], SymMat::diag(d));
  }
}

TEST(Minkowski, ZeroCoefficientScales) {
  Rng rng(3);
  const GeneralBody a = random_body(rng, 2, 3, false);
  const GeneralBody b = random_body(rng, 2, 2, false);
  const GeneralBody s = minkowski(2.0, a, 0.0, b);
  for (int t = 0; t < 20; ++t) {
    const SymMat x = random_sym(rng, 2);
    EXPECT_NEAR(support(s, x), 2.0 * support(a, x), 1e-12);
  }
  EXPECT_THROW(minkowski(-1.0, a, 1.0, b), DomainError);
}

TEST(Minkowski, SupportIsAdditive) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 3;
    const GeneralBody a = random_body(rng, n, 4, false);
    const GeneralBody b = random_body(rng, n, 3, false);
    const double ca = uniform(rng, 0.0, 3.0);
    const double cb = uniform(rng, 0.0, 3.0);
    const GeneralBody s = minkowski(ca, a, cb, b);
    for (int t = 0; t < 100; ++t) {
      const SymMat x = random_sym(rng, n);
      EXPECT_NEAR(support(s, x), ca * support(a, x) + cb * support(b, x), 1e-9);
    }
  }
}

TEST(Negate, SupportReflects) {
  const GeneralBody id({SymMat::identity(2)});
  EXPECT_EQ(negate(id).generators()[0], -SymMat::identity(2));
  Rng rng(5);
  const GeneralBody a = random_body(rng, 3, 4, false);
  const GeneralBody aa = negate(negate(a));
  for (std::size_t k = 0; k < a.generators().size(); ++k) EXPECT_EQ(aa.generators()[k], a.generators()[k]);
  for (int t = 0; t < 100; ++t) {
    const SymMat x = random_sym(rng, 3);
    EXPECT_NEAR(support(negate(a), x), support(a, -x), 1e-12);
  }
}

TEST(ClassifyEllipticity, Examples) {
  const auto pucci = classify_ellipticity(phi_inv_representative(RotInvBody::pucci(3, 1.0, 3.0)));
  EXPECT_EQ(pucci.tag, Ellipticity::UniformlyElliptic);
  EXPECT_NEAR(pucci.lambda, 1.0, 1e-14);
  EXPECT_NEAR(pucci.Lambda, 3.0, 1e-14);
  EXPECT_EQ(classify_ellipticity(k_infinity_vertices(3)).tag, Ellipticity::DegenerateElliptic);
  EXPECT_EQ(classify_ellipticity(GeneralBody({SymMat::diag({1, -1})})).tag, Ellipticity::NotElliptic);
}

TEST(Nondegenerate, Examples) {
  EXPECT_TRUE(nondegenerate(phi_inv_representative(RotInvBody::pucci(3, 1.0, 3.0))));
  EXPECT_FALSE(nondegenerate(phi_inv_representative(RotInvBody::pucci(3, 0.0, 1.0))));
  EXPECT_TRUE(nondegenerate(GeneralBody({SymMat::diag({1, 0})})));
}

TEST(Nnls, MatchesKnownSolution) {
  Eigen::MatrixXd a(3, 2);
  a << 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd b(3);
  b << 2, -1, 1;
  // unconstrained optimum has t2 < 0; constrained optimum is t = (1.5, 0)
  const NnlsResult r = nnls(a, b);
  EXPECT_NEAR(r.x(0), 1.5, 1e-12);
  EXPECT_EQ(r.x(1), 0.0);
}

TEST(ConeContains, Examples) {
  const GeneralBody body = pucci_vertices_2d();
  const auto axis = cone_contains(body, 2.0 * body.generators()[1]);
  EXPECT_TRUE(axis.inside);
  EXPECT_LE(axis.residual, 1e-12);
  const auto neg = cone_contains(body, -SymMat::identity(2));
  EXPECT_FALSE(neg.inside);
  EXPECT_GT(neg.residual, 0.1);
}

TEST(ConeContains, RandomConicCombinationsRoundTrip) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 3;
    const GeneralBody body = random_body(rng, n, 2 + trial % 5, true);
    SymMat x(n);
    for (const auto& g : body.generators()) x += uniform(rng, 0.0, 3.0) * g;
    const auto r = cone_contains(body, x);
    EXPECT_TRUE(r.inside) << r.residual;
    SymMat rebuilt(n);
    for (std::size_t k = 0; k < r.weights.size(); ++k) {
      EXPECT_GE(r.weights[k], 0.0);
      rebuilt += r.weights[k] * body.generators()[k];
    }
    EXPECT_NEAR(frobenius_norm(rebuilt - x), r.residual, 1e-12);
  }
}

TEST(NestedCones, Examples) {
  const int n = 3;
  const double p = 4.0;
  const GeneralBody lap({(1.0 / n) * SymMat::identity(n)});
  const GeneralBody kp = phi_inv_representative(RotInvBody::dominative(n, p));
  const GeneralBody kp_scaled = minkowski(1.0 / (n + p - 2.0), kp, 0.0, kp);
  EXPECT_TRUE(nested_cones(lap, kp_scaled));
  EXPECT_TRUE(nested_cones(kp, kp));

  const double q = 7.0;
  const GeneralBody kq = phi_inv_representative(RotInvBody::dominative(n, q));
  const auto rep = nesting_report(kq, kp);
  EXPECT_FALSE(rep.nested);
  ASSERT_TRUE(rep.offending_generator.has_value());
  EXPECT_GT(rep.residual, 1e-3);
  EXPECT_THROW(nested_cones(lap, GeneralBody({SymMat::identity(2)})), DimensionError);
}

// Property suites.

TEST(Properties, Sublinearity) {
  Rng rng(7);
  for (int t = 0; t < 500; ++t) {
    const int n = 2 + t % 4;
    const GeneralBody body = random_body(rng, n, 1 + t % 6, false);
    const SymMat x = random_sym(rng, n);
    const SymMat y = random_sym(rng, n);
    const double s = uniform(rng, 0.0, 10.0);
    EXPECT_LE(support(body, x + y), support(body, x) + support(body, y) + 1e-9);
    EXPECT_LE(std::abs(support(body, s * x) - s * support(body, x)), 1e-9 * (1.0 + s * frobenius_norm(x)));
  }
}

TEST(Properties, DegenerateEllipticityIsMonotone) {
  Rng rng(8);
  for (int t = 0; t < 300; ++t) {
    const int n = 2 + t % 3;
    const GeneralBody body = random_body(rng, n, 4, true);
    ASSERT_NE(classify_ellipticity(body).tag, Ellipticity::NotElliptic);
    const SymMat x = random_sym(rng, n);
    const SymMat y = x + random_psd(rng, n, 0.0, 1.0);
    ASSERT_GE(order_margin(x, y), -1e-12);
    EXPECT_LE(support(body, x), support(body, y) + 1e-9);
  }
}

TEST(Properties, UniformEllipticitySandwich) {
  Rng rng(9);
  for (int t = 0; t < 300; ++t) {
    const int n = 2 + t % 3;
    const GeneralBody body = random_body(rng, n, 4, true);
    const auto cls = classify_ellipticity(body);
    const SymMat x = random_sym(rng, n);
    const SymMat y = random_sym(rng, n);
    EXPECT_LE(support(body, x + y), support(body, x) + pucci_eval(cls.lambda, cls.Lambda, y) + 1e-9);
  }
}

TEST(Properties, NestingOrdersSolutionSets) {
  const int n = 3;
  const GeneralBody f({(1.0 / n) * SymMat::identity(n)});
  const GeneralBody g = phi_inv_representative(RotInvBody::dominative(n, 5.0));
  ASSERT_TRUE(nested_cones(f, g));
  Rng rng(10);
  int hits = 0;
  for (int t = 0; t < 2000; ++t) {
    const SymMat x = random_sym(rng, n);
    if (support(g, x) <= 0.0) {
      ++hits;
      EXPECT_LE(support(f, x), 1e-9);
    }
  }
  EXPECT_GT(hits, 50);
}

TEST(Properties, ShiftAndScaleCommuteWithSingletonMinkowski) {
  Rng rng(11);
  const GeneralBody k = random_body(rng, 3, 5, false);
  const SymMat a = random_sym(rng, 3);
  const double alpha = 2.5;
  const GeneralBody shifted = minkowski(1.0, GeneralBody({a}), alpha, k);
  ASSERT_EQ(shifted.generators().size(), k.generators().size());
  for (std::size_t i = 0; i < k.generators().size(); ++i) {
    EXPECT_EQ(shifted.generators()[i], 1.0 * a + alpha * k.generators()[i]);
  }
}
