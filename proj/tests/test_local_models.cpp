#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "syzflow/flow_engine.hpp"
#include "syzflow/local_models.hpp"

using namespace syzflow;

namespace {

// Section-map radius written in polar form; the sin^2 term carries max(phi1, 0).
double section_oracle(double c, double r1, double th1, double r2) {
  const double phi1 = r2 * r2 - c * c * r1 * r1 / (r2 * r2);
  const double co = std::cos(th1), si = std::sin(th1);
  return co * co * (r1 * r1 + r2 * r2) + si * si * std::max(phi1, 0.0);
}

FlowOptions tight() {
  FlowOptions o;
  o.abs_tol = o.rel_tol = 1e-12;
  return o;
}

}  // namespace

TEST(Invariants, CrossPairSum) {
  CVec z(2);
  z << 2.0, 2.0;
  auto inv = invariants_of_model({1, 1, 0}, z);
  ASSERT_EQ(inv.size(), 1u);
  EXPECT_TRUE(inv[0].cross);
  EXPECT_DOUBLE_EQ(inv[0].value, 8.0);
}

TEST(Invariants, SameGroupDifference) {
  CVec z(2);
  z << cplx(0.3, 0.4), cplx(0.3, 0.4);
  auto inv = invariants_of_model({2, 0, 0}, z);
  ASSERT_EQ(inv.size(), 1u);
  EXPECT_FALSE(inv[0].cross);
  EXPECT_DOUBLE_EQ(inv[0].value, 0.0);
}

TEST(Invariants, ExtraCoordinatesIgnored) {
  CVec z = CVec::Ones(5);
  EXPECT_EQ(invariants_of_model({2, 1, 2}, z).size(), 3u);
  EXPECT_THROW(invariants_of_model({0, 1, 0}, z), Error);
}

TEST(Invariants, ConservedAlongFlow) {
  ModelSpec spec{2, 2, 0};
  auto pencil = model_pencil(spec);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.6, 1.4), ph(0, 2 * M_PI);
  for (int k = 0; k < 10; ++k) {
    CVec z(4);
    for (int i = 0; i < 4; ++i) z(i) = std::polar(u(rng), ph(rng));
    const double t0 = eval_s(pencil, affine(z)).value.real();
    auto tr = integrate(pencil, flat_metric(), affine(z), t0 + 0.3, tight());
    auto a = invariants_of_model(spec, z), b = invariants_of_model(spec, tr.end.coords);
    for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i].value, b[i].value, 1e-6 * (1 + std::abs(a[i].value)));
  }
}

TEST(Invariants, CrossInvariantsNeverHalve) {
  // With m, n > 0 no trajectory from a nonzero start can drive the cross sums to 0.
  ModelSpec spec{1, 2, 0};
  auto pencil = model_pencil(spec);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.3, 1.5), ph(0, 2 * M_PI);
  for (int k = 0; k < 10; ++k) {
    CVec z(3);
    for (int i = 0; i < 3; ++i) z(i) = std::polar(u(rng), ph(rng));
    const double t0 = eval_s(pencil, affine(z)).value.real();
    FlowOptions o = tight();
    o.standoff = 1e-9;
    auto tr = integrate(pencil, flat_metric(), affine(z), t0 + (k % 2 ? 2.0 : -2.0), o);
    auto cross_max = [&](const CVec& w) {
      double mx = 0.0;
      for (auto& p : invariants_of_model(spec, w))
        if (p.cross) mx = std::max(mx, p.value);
      return mx;
    };
    const double c0 = cross_max(z);
    for (const auto& s : tr.samples) EXPECT_GT(cross_max(s.point.coords), 0.5 * c0);
  }
}

TEST(PhiPair, OnX0) {
  const cplx w(0.7, -0.4);
  CVec z(3);
  z << 1.0, 0.0, w;
  auto [p1, p2] = phi_pair(z, 0.0);
  EXPECT_DOUBLE_EQ(p1, -std::norm(w));
  EXPECT_DOUBLE_EQ(p2, 1.0);
}

TEST(PhiPair, BranchesAgreeOnSeam) {
  // |z2| = |z3| exactly; both branches and their average coincide.
  for (double th : {0.0, 0.4, 1.3, 2.9}) {
    CVec z = xc_point(0.5, 2.0, th, 1.0, 0.7);
    ASSERT_NEAR(std::abs(z(1)), std::abs(z(2)), 1e-15);
    const double a = z(0).real() * std::sqrt(1 + std::norm(z(1) / z(0)));
    const double b = z(0).real() * std::sqrt(1 + std::norm(z(2) / z(0)));
    EXPECT_NEAR(a, b, 1e-12);
    EXPECT_NEAR(phi_pair(z, 0.5).second, a, 1e-12);
  }
}

TEST(PhiPair, OffVariety) {
  CVec z(3);
  z << 1.0, 1.0, 1.0;
  try {
    phi_pair(z, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OffVariety);
  }
}

TEST(PhiPair, ConservedFromHalfToSevenTenths) {
  auto pencil = example31_pencil();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.5, 1.5), ph(-1.2, 1.2), ph2(0, 2 * M_PI);
  for (int k = 0; k < 20; ++k) {
    CVec z = xc_point(0.5, u(rng), ph(rng), u(rng), ph2(rng));
    auto a = phi_pair(z, 0.5);
    auto tr = integrate(pencil, flat_metric(), affine(z), 0.7, tight());
    auto b = phi_pair(tr.end.coords, 0.7);
    EXPECT_NEAR(a.first, b.first, 1e-6 * (1 + std::abs(a.first)));
    EXPECT_NEAR(a.second, b.second, 1e-6 * (1 + std::abs(a.second)));
  }
}

TEST(Extended, IdentityOnHyperplane) {
  CVec z(4);
  z << cplx(0.4, 0.2), cplx(1.0, -1.0), 0.0, cplx(0.3, 0.9);
  CVec Z = extended_coordinates(LocalModel::I, z);
  EXPECT_LE((Z - z).norm(), 1e-15);
  CVec w(3);
  w << cplx(1.0, 0.5), 0.0, cplx(-2.0, 0.1);
  EXPECT_LE((extended_coordinates(LocalModel::II, w) - w).norm(), 1e-15);
}

TEST(Extended, DegenerateSeamModelII) {
  CVec z(2);
  z << std::polar(1.3, 0.2), std::polar(1.3, 2.0);
  CVec Z = extended_coordinates(LocalModel::II, z);
  EXPECT_NEAR(std::abs(Z(0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(Z(1)), 0.0, 1e-15);
}

TEST(Extended, ZeroPhaseIsAnError) {
  CVec z(3);
  z << 0.0, 0.5, 1.0;
  try {
    extended_coordinates(LocalModel::I, z);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroCoordinate);
  }
  EXPECT_THROW(extended_coordinates(LocalModel::I, z, 2), Error);  // not the minimizer
}

TEST(Extended, ContinuousAcrossMinimizerSwitch) {
  for (double eps : {1e-4, 1e-6, 1e-8}) {
    CVec a(3), b(3);
    a << cplx(0.8, 0.1), std::polar(0.5 + eps, 0.3), std::polar(0.5, 1.1);
    b << cplx(0.8, 0.1), std::polar(0.5, 0.3), std::polar(0.5 + eps, 1.1);
    CVec Za = extended_coordinates(LocalModel::I, a), Zb = extended_coordinates(LocalModel::I, b);
    // Only the vanishing coordinates see the switch, at the Holder rate sqrt(eps).
    EXPECT_LE((Za - Zb).norm(), 3 * std::sqrt(eps));
    EXPECT_LE(std::abs(Za(0) - Zb(0)), 1e-8 + 2 * eps);
  }
}

TEST(Extended, ConservedAlongFlowOnRealLevel) {
  // Model I with n = 2: s = z1 z2 / z0, seeds on {z2 = 0}.
  auto p1 = example31_pencil();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.6, 1.4), ph(0, 2 * M_PI);
  for (int k = 0; k < 10; ++k) {
    CVec z(3);
    z << std::polar(u(rng), ph(rng)), std::polar(u(rng), ph(rng)), 0.0;
    auto tr = integrate(p1, flat_metric(), affine(z), 0.8, tight());
    CVec Z0 = extended_coordinates(LocalModel::I, z), Z1 = extended_coordinates(LocalModel::I, tr.end.coords);
    EXPECT_LE((Z1 - Z0).norm(), 1e-6);
  }
}

TEST(Lipschitz, SectionMapMatchesPolarForm) {
  for (double th : {0.0, 0.5, M_PI / 2, 2.0})
    for (double r2 : {0.8, 1.0, 1.3}) {
      CVec z = xc_point(1.0, 1.0, th, r2, 0.4);
      EXPECT_NEAR(section_radius2(z, 1.0), section_oracle(1.0, 1.0, th, r2), 1e-12);
    }
}

TEST(Lipschitz, KinkPersistsOffRealLocus) {
  auto rep = lipschitz_probe(1.0, 1.0, M_PI / 2);
  EXPECT_TRUE(rep.continuous);
  EXPECT_TRUE(rep.kink_persists);
  EXPECT_TRUE(rep.pass);
  ASSERT_EQ(rep.levels.size(), 5u);
  // sin^2(theta1) * d phi1/d r2 at the seam = 4 r2.
  EXPECT_NEAR(rep.levels.back().derivative_gap, 4.0, 1e-3);
  EXPECT_NEAR(rep.value_gap_order, 1.0, 0.1);
}

TEST(Lipschitz, SmoothOnRealLocus) {
  auto rep = lipschitz_probe(1.0, 1.0, 0.0);
  EXPECT_TRUE(rep.continuous);
  EXPECT_FALSE(rep.kink_persists);
  for (const auto& lv : rep.levels) EXPECT_LT(lv.derivative_gap, 1e-6);
}

TEST(Lipschitz, OriginSecondDifferences) {
  // phi2 is even and positively homogeneous of degree one near z2 = z3 = 0,
  // so second differences grow like 1/h there.
  auto rep = origin_second_differences(1.0);
  EXPECT_FALSE(rep.bounded);
  EXPECT_NEAR(rep.growth_exponent, 1.0, 0.05);
}
