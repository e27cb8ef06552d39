#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "syzflow/flow_engine.hpp"

using namespace syzflow;

namespace {

// Invariants written out by hand, independent of local_models.
double phi1(const CVec& z) { return std::norm(z(1)) - std::norm(z(2)); }

double phi2(const CVec& z) {
  const cplx zmin = std::abs(z(1)) <= std::abs(z(2)) ? z(1) : z(2);
  return z(0).real() * std::sqrt(1.0 + std::norm(zmin / z(0)));
}

CVec extended_I(const CVec& z) {
  // z = (z0, z1, ..., zn), s = z1...zn / z0.
  int m = 1;
  for (int k = 2; k < z.size(); ++k)
    if (std::abs(z(k)) < std::abs(z(m))) m = k;
  const double rm2 = std::norm(z(m));
  CVec Z(z.size());
  Z(0) = z(0) / std::abs(z(0)) * std::sqrt(std::norm(z(0)) + rm2);
  for (int i = 1; i < z.size(); ++i) {
    const double a = std::abs(z(i));
    Z(i) = a == 0.0 ? cplx(0.0) : z(i) / a * std::sqrt(std::max(0.0, std::norm(z(i)) - rm2));
  }
  return Z;
}

FlowOptions tight() {
  FlowOptions o;
  o.abs_tol = o.rel_tol = 1e-12;
  return o;
}

}  // namespace

TEST(Integrate, ProductModelKeepsModuliEqual) {
  auto pencil = monomial_model_pencil(2, 0, 0);
  auto tr = integrate(pencil, flat_metric(), affine({1.0, 1.0}), 2.0, tight());
  const CVec& z = tr.end.coords;
  EXPECT_NEAR(std::abs(z(0) * z(1) - 2.0), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(z(0)), std::abs(z(1)), 1e-10);
  EXPECT_NEAR(std::abs(z(0)), std::sqrt(2.0), 1e-10);
  EXPECT_LE(tr.level_residual, 1e-10);
}

TEST(Integrate, ZeroLengthIsIdentity) {
  auto pencil = monomial_model_pencil(2, 0, 0);
  AffinePoint start = affine({cplx(0.3, 0.4), cplx(1.1, -0.2)});
  const double t0 = eval_s(pencil, start).value.real();
  auto tr = integrate(pencil, flat_metric(), start, t0);
  EXPECT_EQ(tr.accepted, 0);
  EXPECT_EQ(tr.samples.size(), 1u);
  EXPECT_EQ((tr.end.coords - start.coords).norm(), 0.0);
}

TEST(Integrate, Example31ConservesPhiPair) {
  auto pencil = example31_pencil();
  const cplx w(0.8, 0.3);
  AffinePoint start = affine({1.0, 0.0, w});
  auto tr = integrate(pencil, flat_metric(), start, 0.5, tight());
  const CVec& z = tr.end.coords;
  EXPECT_NEAR(std::abs(z(1) * z(2) - 0.5 * z(0)), 0.0, 1e-10);
  EXPECT_NEAR(phi1(z), phi1(start.coords), 1e-6 * std::abs(phi1(start.coords)));
  EXPECT_NEAR(phi2(z), phi2(start.coords), 1e-6);
  EXPECT_NEAR(phi1(start.coords), -std::norm(w), 1e-15);
  EXPECT_NEAR(phi2(start.coords), 1.0, 1e-15);
}

TEST(Integrate, PushforwardAlongAcceptedSteps) {
  auto pencil = example31_pencil();
  auto tr = integrate(pencil, flat_metric(), affine({1.0, 0.0, cplx(0.5, 0.5)}), 0.5, tight());
  EXPECT_GT(tr.accepted, 3);
  EXPECT_LE(tr.max_ds_residual, 1e-8);
  EXPECT_LE(tr.max_secant_residual, 1e-8);
  EXPECT_LE(tr.max_im_drift, 1e-12);
  for (size_t i = 1; i < tr.samples.size(); ++i) EXPECT_GT(tr.samples[i].t, tr.samples[i - 1].t);
}

TEST(Integrate, ImDriftFollowsTolerance) {
  // Raw (pre-projection) Im s drift should shrink when the tolerance does.
  auto pencil = monomial_model_pencil(2, 1, 0);
  AffinePoint start = affine({cplx(0.7, 0.2), cplx(0.9, -0.1), cplx(1.2, 0.4)});
  const double t0 = eval_s(pencil, start).value.real();
  double prev = 0.0;
  for (double tol : {1e-6, 1e-8, 1e-10}) {
    FlowOptions o;
    o.abs_tol = o.rel_tol = tol;
    auto tr = integrate(pencil, flat_metric(), start, t0 + 0.4, o);
    if (prev > 0) EXPECT_LT(tr.max_raw_im_drift, 0.5 * prev);
    prev = tr.max_raw_im_drift;
  }
}

TEST(Integrate, FixedStepDriftHasIntegratorOrder) {
  // dopri5 is fifth order; drift of phi1 without projection should scale ~h^5.
  auto pencil = example31_pencil();
  AffinePoint start = affine({1.0, cplx(0.3, 0.2), 0.0});
  std::vector<double> hs{0.1, 0.05, 0.025}, drift;
  for (double h : hs) {
    FlowOptions o;
    o.fixed_dt = h;
    o.project = false;
    auto tr = integrate(pencil, flat_metric(), start, 0.6, o);
    drift.push_back(std::abs(phi1(tr.end.coords) - phi1(start.coords)));
  }
  const double slope = std::log(drift[0] / drift[2]) / std::log(hs[0] / hs[2]);
  EXPECT_GT(slope, 4.0) << drift[0] << " " << drift[2];
}

TEST(Integrate, CriticalPointCrossingUsesArcLength) {
  // s = z^2 has a critical point at 0; the level path Im s = 2e-3 passes close.
  MeromorphicPencil pencil =
      make_pencil(Polynomial::monomial(1, {2}), Polynomial::constant(1, 1.0), false);
  FlowOptions o = tight();
  o.critical_threshold = 0.05;
  auto tr = integrate(pencil, flat_metric(), affine({cplx(1.0, 1e-3)}), -1.0, o);
  EXPECT_TRUE(tr.reparametrized);
  EXPECT_GT(tr.arc_steps, 0);
  EXPECT_LE(tr.level_residual, 1e-10);
  EXPECT_NEAR(std::imag(tr.end.coords(0) * tr.end.coords(0)), 2e-3, 1e-10);
}

TEST(Integrate, ThroughCriticalPointFails) {
  MeromorphicPencil pencil =
      make_pencil(Polynomial::monomial(1, {2}), Polynomial::constant(1, 1.0), false);
  try {
    integrate(pencil, flat_metric(), affine({1.0}), -1.0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_TRUE(e.kind() == ErrorKind::CriticalPointHit || e.kind() == ErrorKind::StepUnderflow)
        << e.what();
  }
}

TEST(Integrate, MaxStepsExceeded) {
  FlowOptions o;
  o.max_steps = 2;
  o.initial_dt = 1e-3;
  try {
    integrate(example31_pencil(), flat_metric(), affine({1.0, 0.0, 1.0}), 0.5, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MaxStepsExceeded);
  }
}

TEST(Integrate, StandoffAbort) {
  // The invariants keep flows away from X_inv, so start inside the radius.
  FlowOptions o;
  o.standoff = 0.05;
  try {
    integrate(example31_pencil(), flat_metric(), affine({0.02, 0.01, 1.0}), 1.0, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CriticalPointHit);
    EXPECT_NE(std::string(e.what()).find("standoff"), std::string::npos);
  }
}

TEST(Integrate, ProjectiveQuinticUnderFubiniStudy) {
  auto pencil = quintic_pencil();
  CVec z(5);
  z << 1.0, cplx(0.0, 0.0), cplx(0.6, 0.2), cplx(0.7, -0.3), cplx(0.5, 0.5);
  AffinePoint start = from_homogeneous(z, 0);
  auto tr = integrate(pencil, fubini_study_metric(), start, 0.3, tight());
  EXPECT_LE(tr.level_residual, 1e-10);
  EXPECT_LE(tr.max_ds_residual, 1e-8);
}

TEST(LevelSet, SeedOnInvIsRejected) {
  auto pencil = example31_pencil();
  std::vector<AffinePoint> seeds{affine({0.0, 0.0, 1.0})};
  try {
    flow_level_set(pencil, flat_metric(), seeds, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IndeterminatePoint);
  }
}

TEST(LevelSet, OffLevelSeedIsRejected) {
  std::vector<AffinePoint> seeds{affine({1.0, 0.1, 1.0})};
  EXPECT_THROW(flow_level_set(example31_pencil(), flat_metric(), seeds, 0.5), Error);
}

TEST(LevelSet, FiberCoherenceOnOrbit) {
  auto pencil = example31_pencil();
  auto seeds = orbit_seeds(affine({1.0, 0.0, cplx(0.6, 0.0)}), {0, 0, 1}, 100);
  auto res = flow_level_set(pencil, flat_metric(), seeds, 0.5, tight());
  auto ref = moment_image(pencil, res.endpoints[0]);
  double worst = 0.0;
  for (const auto& e : res.endpoints) {
    auto m = moment_image(pencil, e);
    for (size_t k = 0; k < m.size(); ++k) worst = std::max(worst, std::abs(m[k] - ref[k]));
    EXPECT_NEAR(std::abs(eval_s(pencil, e).value - 0.5), 0.0, 1e-10);
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(LevelSet, LocalModelOneExtendedCoordinates) {
  // s = z1 z2 z3 / z0, seeds on {z2 = 0}.
  auto pencil = make_pencil(Polynomial::monomial(4, {0, 1, 1, 1}), Polynomial::monomial(4, {1, 0, 0, 0}),
                            false);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 1.5), ph(0.0, 2 * M_PI);
  std::vector<AffinePoint> seeds;
  for (int k = 0; k < 20; ++k)
    seeds.push_back(affine({std::polar(u(rng), ph(rng)), std::polar(u(rng), ph(rng)), 0.0,
                            std::polar(u(rng), ph(rng))}));
  auto res = flow_level_set(pencil, flat_metric(), seeds, 0.4, tight());
  for (size_t k = 0; k < seeds.size(); ++k) {
    CVec Z0 = extended_I(seeds[k].coords), Z1 = extended_I(res.endpoints[k].coords);
    EXPECT_LE((Z1 - Z0).norm(), 1e-6) << k;
  }
}

TEST(Standoff, BoundedBelowUnderRefinement) {
  auto pencil = example31_pencil();
  auto w = balanced_weights(3, {1, 2}, {0});
  std::vector<StandoffReport> reps;
  for (double tol : {1e-8, 1e-10, 1e-12}) {
    FlowOptions o;
    o.abs_tol = o.rel_tol = tol;
    auto tr = integrate(pencil, flat_metric(), affine({1.0, 0.0, cplx(0.2, 0.7)}), 2.0, o);
    reps.push_back(standoff_diagnostic(tr, w));
    EXPECT_FALSE(reps.back().collapsed);
    EXPECT_GT(reps.back().min_rho, 0.1);
  }
  EXPECT_TRUE(standoff_stable(reps, 1e-3));
}

TEST(Standoff, ConstantTrajectory) {
  Trajectory tr;
  for (int i = 0; i < 5; ++i) tr.samples.push_back({double(i), affine({1.0, 1.0, 1.0})});
  auto r = standoff_diagnostic(tr, balanced_weights(3, {1, 2}, {0}));
  EXPECT_DOUBLE_EQ(r.min_rho, r.rho_start);
  EXPECT_FALSE(r.collapsed);
}

TEST(Standoff, FabricatedCollapseIsFlagged) {
  Trajectory tr;
  for (int i = 0; i <= 10; ++i) {
    const double r = std::pow(10.0, -i);
    tr.samples.push_back({double(i), affine({r, r, r})});
  }
  auto rep = standoff_diagnostic(tr, balanced_weights(3, {1, 2}, {0}));
  EXPECT_TRUE(rep.collapsed);
  EXPECT_FALSE(standoff_stable({rep}, 1.0));
}

TEST(Trajectory, JsonHasDiagnostics) {
  auto tr = integrate(example31_pencil(), flat_metric(), affine({1.0, 0.0, 1.0}), 0.2);
  auto j = trajectory_to_json(tr);
  EXPECT_EQ(j["samples"].size(), tr.samples.size());
  EXPECT_TRUE(j["diagnostics"].contains("level_residual"));
}
