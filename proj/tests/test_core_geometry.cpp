#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "syzflow/core_geometry.hpp"

namespace syzflow {
namespace {

CVec random_cvec(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  CVec v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
  return v;
}

// Riemannian gradient of Re s by central differences in real coordinates,
// using the real form Re(u^T G conj w) built entry by entry.
CVec fd_gradient(const MeromorphicPencil& pencil, const AffinePoint& pt, const CMat& G, double h) {
  const int n = static_cast<int>(pt.coords.size());
  auto unit = [&](int a) {
    CVec e = CVec::Zero(n);
    e(a % n) = (a < n) ? cplx(1, 0) : cplx(0, 1);
    return e;
  };
  Eigen::MatrixXd M(2 * n, 2 * n);
  for (int a = 0; a < 2 * n; ++a)
    for (int b = 0; b < 2 * n; ++b) {
      CVec u = unit(a), w = unit(b);
      cplx acc = 0.0;
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) acc += u(j) * G(j, k) * std::conj(w(k));
      M(a, b) = acc.real();
    }
  Eigen::VectorXd dF(2 * n);
  for (int a = 0; a < 2 * n; ++a) {
    AffinePoint pp = pt, pm = pt;
    pp.coords += h * unit(a);
    pm.coords -= h * unit(a);
    dF(a) = (eval_s(pencil, pp).value.real() - eval_s(pencil, pm).value.real()) / (2 * h);
  }
  Eigen::VectorXd X = M.ldlt().solve(dF);
  CVec v(n);
  for (int j = 0; j < n; ++j) v(j) = cplx(X(j), X(j + n));
  return v;
}

TEST(EvalS, Examples) {
  auto pen = example31_pencil();
  EXPECT_NEAR(std::abs(eval_s(pen, affine({1.0, 2.0, 3.0})).value - cplx(6.0)), 0.0, 1e-15);
  EXPECT_EQ(eval_s(pen, affine({1.0, 0.0, 5.0})).value, cplx(0.0));
  auto q = quintic_pencil();
  AffinePoint ones{0, CVec::Ones(4)};
  EXPECT_NEAR(std::abs(eval_s(q, ones).value - cplx(1.0)), 0.0, 1e-15);
}

TEST(EvalS, PoleIsTaggedAndBaseLocusThrows) {
  auto pen = example31_pencil();
  auto sv = eval_s(pen, affine({0.0, 1.0, 2.0}));
  EXPECT_TRUE(sv.pole);
  try {
    eval_s(pen, affine({0.0, 0.0, 1.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IndeterminatePoint);
  }
}

TEST(Charts, RoundTripAndSValueAgree) {
  std::mt19937_64 rng(7);
  auto q = quintic_pencil();
  for (int trial = 0; trial < 50; ++trial) {
    CVec z = random_cvec(rng, 5);
    AffinePoint a = from_homogeneous(z, 0);
    for (int k = 1; k < 5; ++k) {
      AffinePoint b = to_chart(a, k);
      AffinePoint back = to_chart(b, 0);
      EXPECT_LE((back.coords - a.coords).norm(), 1e-14 * a.coords.norm() * 10);
      EXPECT_NEAR(std::abs(eval_s(q, a).value - eval_s(q, b).value), 0.0,
                  1e-12 * std::max(1.0, std::abs(eval_s(q, a).value)));
    }
  }
}

TEST(Gradient, Example31FlatMatchesDisplay) {
  auto pen = example31_pencil();
  auto g = gradient_field(pen, affine({1.0, 1.0, 1.0}), flat_metric());
  EXPECT_NEAR(std::abs(g.v(0) - cplx(-1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(g.v(1) - cplx(1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(g.v(2) - cplx(1)), 0.0, 1e-15);

  // Generic point: conj of (-z2 z3/z1^2, z3/z1, z2/z1).
  std::mt19937_64 rng(3);
  CVec z = random_cvec(rng, 3);
  auto gz = gradient_field(pen, affine(z), flat_metric());
  CVec expect(3);
  expect << std::conj(-z(1) * z(2) / (z(0) * z(0))), std::conj(z(2) / z(0)), std::conj(z(1) / z(0));
  EXPECT_LE((gz.v - expect).norm(), 1e-13 * expect.norm());
}

TEST(Gradient, ProductModel) {
  auto pen = monomial_model_pencil(2, 0, 0);
  auto g = gradient_field(pen, affine({1.0, 1.0}), flat_metric());
  EXPECT_NEAR(std::abs(g.v(0) - cplx(1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(g.v(1) - cplx(1)), 0.0, 1e-15);
}

TEST(Gradient, FubiniStudyFiniteDifferenceOracle) {
  auto pen = example31_pencil();
  AffinePoint pt = affine({1.0, 1.0, 1.0});
  auto g = gradient_field(pen, pt, fubini_study_metric());
  CVec ref = fd_gradient(pen, pt, fubini_study_matrix(pt.coords), 1e-5);
  EXPECT_LE((g.v - ref).norm(), 1e-8);
}

TEST(Gradient, RandomPointsFlatAndFubiniStudy) {
  std::mt19937_64 rng(11);
  auto pen = example31_pencil();
  for (auto metric : {flat_metric(), fubini_study_metric()}) {
    for (int trial = 0; trial < 100; ++trial) {
      CVec z = random_cvec(rng, 3);
      z(0) += cplx(1.5, 0.0);  // keep away from the pole
      AffinePoint pt = affine(z);
      auto g = gradient_field(pen, pt, metric);
      CVec ref = fd_gradient(pen, pt, metric(pt), 1e-5);
      EXPECT_LE((g.v - ref).norm(), 1e-7 * ref.norm()) << "trial " << trial;
    }
  }
}

TEST(Normalized, Example31Value) {
  auto pen = example31_pencil();
  auto V = normalized_field(pen, affine({1.0, 1.0, 1.0}), flat_metric());
  EXPECT_NEAR(std::abs(V.v(0) - cplx(-1.0 / 3)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(V.v(1) - cplx(1.0 / 3)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(V.v(2) - cplx(1.0 / 3)), 0.0, 1e-15);
  EXPECT_NEAR(gradient_norm2(pen, affine({1.0, 1.0, 1.0}), flat_metric()), 3.0, 1e-14);
}

TEST(Normalized, UnitPushforward) {
  std::mt19937_64 rng(5);
  auto pen = example31_pencil();
  for (auto metric : {flat_metric(), fubini_study_metric()})
    for (int i = 0; i < 200; ++i) {
      AffinePoint pt = affine(random_cvec(rng, 3));
      auto V = normalized_field(pen, pt, metric);
      cplx d = ds_apply(pen, pt, V.v);
      EXPECT_NEAR(std::abs(d - cplx(1.0)), 0.0, 1e-10);
    }
}

TEST(Normalized, VanishesQuadraticallyNearPole) {
  auto pen = example31_pencil();
  const cplx z2(0.7, 0.2), z3(-0.4, 1.1);
  double prev = 0.0;
  for (double e = 1e-1; e > 1e-6; e /= 10) {
    AffinePoint pt = affine({cplx(e, 0.3 * e), z2, z3});
    auto V = normalized_field(pen, pt, flat_metric());
    double ratio = V.v.norm() / std::norm(pt.coords(0));
    const double expect = 1.0 / std::abs(z2 * z3);
    EXPECT_NEAR(ratio, expect, 10.0 * expect * std::norm(pt.coords(0)));
    if (prev > 0) EXPECT_NEAR(ratio, prev, 0.2 * prev);
    prev = ratio;
    auto W = smooth_representative(pen, pt, flat_metric());
    cplx rho = V.v.dot(W.v) / V.v.squaredNorm();
    EXPECT_GT(rho.real(), 0.0);
  }
}

TEST(Normalized, CriticalPointThrows) {
  auto pen = monomial_model_pencil(2, 0, 0);
  try {
    normalized_field(pen, affine({0.0, 0.0}), flat_metric());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CriticalPoint);
  }
}

TEST(SmoothRepresentative, ParallelToVWithPositiveRatio) {
  std::mt19937_64 rng(17);
  auto pen = example31_pencil();
  auto V = normalized_field(pen, affine({1.0, 1.0, 1.0}), flat_metric());
  auto W = smooth_representative(pen, affine({1.0, 1.0, 1.0}), flat_metric());
  EXPECT_NEAR(std::abs(W.v(0) / V.v(0) - W.v(1) / V.v(1)), 0.0, 1e-14);
  EXPECT_GT((W.v(0) / V.v(0)).real(), 0.0);

  auto quintic = quintic_pencil();
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const bool use_q = (i % 2 == 1);
    const auto& p = use_q ? quintic : pen;
    AffinePoint pt = use_q ? from_homogeneous(random_cvec(rng, 5), 0) : affine(random_cvec(rng, 3));
    MetricField m = (i % 4 < 2) ? flat_metric() : fubini_study_metric();
    auto Vi = normalized_field(p, pt, m);
    auto Wi = smooth_representative(p, pt, m);
    cplx rho = Vi.v.dot(Wi.v) / Vi.v.squaredNorm();
    EXPECT_LT(std::abs(rho.imag()), 1e-9 * std::abs(rho));
    EXPECT_GT(rho.real(), 0.0);
    double ang = (Wi.v - rho.real() * Vi.v).norm() / Wi.v.norm();
    EXPECT_LT(ang, 1e-9);
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(SmoothRepresentative, FiniteAtPoleAndZeroOnBaseLocus) {
  auto pen = example31_pencil();
  auto W = smooth_representative(pen, affine({0.0, 1.0, 2.0}), flat_metric());
  EXPECT_TRUE(W.v.allFinite());
  auto W0 = smooth_representative(pen, affine({0.0, 0.0, 1.0}), flat_metric());
  EXPECT_EQ(W0.v.norm(), 0.0);
}

TEST(Metric, FubiniStudyHermitianPositive) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 200; ++i) {
    CVec x = random_cvec(rng, 4, 3.0);
    CMat g = fubini_study_matrix(x);
    EXPECT_LE((g - g.adjoint()).norm(), 1e-14);
    Eigen::SelfAdjointEigenSolver<CMat> es(g);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Charts, DirectionFieldIsChartIndependent) {
  std::mt19937_64 rng(29);
  auto q = quintic_pencil();
  auto fs = fubini_study_metric();
  for (int i = 0; i < 50; ++i) {
    CVec z = random_cvec(rng, 5);
    AffinePoint a = from_homogeneous(z, best_chart(z));
    auto Va = normalized_field(q, a, fs);
    for (int k = 0; k < 5; ++k) {
      if (k == a.chart) continue;
      AffinePoint b = to_chart(a, k);
      auto Vb = normalized_field(q, b, fs);
      auto Vab = change_chart(Va, k);
      EXPECT_LE((Vab.v - Vb.v).norm(), 1e-8 * Vb.v.norm());
      EXPECT_NEAR(std::abs(ds_apply(q, b, Vab.v) - cplx(1.0)), 0.0, 1e-10);
    }
  }
}

TEST(Json, PencilAndPointRoundTrip) {
  auto q = quintic_pencil();
  nlohmann::json j = q;
  auto back = j.get<MeromorphicPencil>();
  AffinePoint pt{2, CVec::Constant(4, cplx(0.3, -0.2))};
  EXPECT_NEAR(std::abs(eval_s(q, pt).value - eval_s(back, pt).value), 0.0, 1e-15);
  auto pj = point_from_json(point_to_json(pt));
  EXPECT_EQ(pj.chart, 2);
  EXPECT_EQ((pj.coords - pt.coords).norm(), 0.0);
}

}  // namespace
}  // namespace syzflow
