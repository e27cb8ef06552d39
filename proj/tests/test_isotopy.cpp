#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "syzflow/fibration.hpp"
#include "syzflow/isotopy.hpp"

using namespace syzflow;

namespace {

IsotopyConfig piecewise(double t) {
  IsotopyConfig c;
  c.t = t;
  return c;
}

IsotopyConfig smooth(double t, double eps = 0.05) {
  IsotopyConfig c;
  c.t = t;
  c.variant = IsotopyVariant::Smooth;
  c.eps = eps;
  return c;
}

// The six region maps written out one by one.
std::pair<cplx, cplx> region_map(int region, cplx x1, cplx x2, double t) {
  const double r1 = std::abs(x1), r2 = std::abs(x2);
  switch (region) {
    case 0: return {std::pow(1 / r2, t) * x1, std::pow(1 / r2, t) * x2};
    case 1: return {std::pow(1 / r1, t) * x1, std::pow(1 / r1, t) * x2};
    case 2: return {x1, std::pow(1 / r2, t) * x2};
    case 3: return {std::pow(1 / r1, t) * x1, x2};
    case 4: return {std::pow(r2 / r1, t) * x1, x2};
    default: return {x1, std::pow(r1 / r2, t) * x2};
  }
}

// Fubini-Study form on the undeformed curve against dx1 ^ dx1bar, from
// omega = (dx1 dx1b + dx2 dx2b + (x2 dx1 - x1 dx2)(...)b) / (1 + |x|^2)^2.
double fs_ratio_undeformed(cplx x1, cplx x2) {
  const cplx d2 = -std::pow(x1 / x2, 4);
  const double w = 1 + std::norm(x1) + std::norm(x2);
  return (1 + std::norm(d2) + std::norm(x2 - x1 * d2)) / (w * w);
}

CurvePoint on_stratum_11(int k) {
  // r1 = r2 = 1: x1^5 = e^{2 pi i/3}, x2^5 = e^{-2 pi i/3}.
  const cplx x1 = std::polar(1.0, (2 * M_PI / 3 + 2 * M_PI * k) / 5);
  const cplx x2 = std::polar(1.0, (-2 * M_PI / 3 + 2 * M_PI * (k + 2)) / 5);
  return curve_point(x1, x2);
}

}  // namespace

TEST(Cutoff, AntisymmetryAndSupport) {
  for (double eps : {0.01, 0.05, 0.2}) {
    Cutoff b{eps};
    for (int i = -400; i <= 400; ++i) {
      const double a = 2.5 * eps * i / 400;
      EXPECT_NEAR(b.value(a) + b.value(-a), 1.0, 1e-12);
      EXPECT_GE(b.value(a), 0.0);
      EXPECT_LE(b.value(a), 1.0);
      if (a <= -eps) EXPECT_EQ(b.value(a), 0.0);
      if (a >= eps) EXPECT_EQ(b.value(a), 1.0);
      const double h = 1e-6 * eps;
      EXPECT_NEAR(b.d1(a), (b.value(a + h) - b.value(a - h)) / (2 * h), 1e-5 / eps);
    }
  }
}

TEST(Cutoff, Lambda) {
  const IsotopyConfig c = smooth(0.3, 0.05);
  EXPECT_DOUBLE_EQ(cutoff_lambda(1.0, c), 0.5);
  EXPECT_EQ(cutoff_lambda(std::exp(-0.1), c), 0.0);
  EXPECT_EQ(cutoff_lambda(std::exp(0.1), c), 1.0);
  // lambda(a) = d/dL [L b(L)] at L = log a.
  const Cutoff b = c.b();
  for (double L : {-0.04, -0.02, 0.01, 0.03}) {
    const double h = 1e-7;
    const double fd = ((L + h) * b.value(L + h) - (L - h) * b.value(L - h)) / (2 * h);
    EXPECT_NEAR(cutoff_lambda(std::exp(L), c), fd, 1e-6);
  }
  EXPECT_THROW(cutoff_lambda(0.0, c), Error);
}

TEST(CurvePointTest, OnCurveAndBranches) {
  for (int k = 0; k < 5; ++k) {
    auto p = curve_point(cplx(0.7, -1.1), k);
    EXPECT_LE(std::abs(std::pow(p.x1, 5) + std::pow(p.x2, 5) + 1.0), 1e-12);
    EXPECT_EQ(curve_point(p.x1, p.x2).branch, k);
  }
  EXPECT_THROW(curve_point(cplx(1, 0), cplx(1, 0)), Error);
  EXPECT_THROW(curve_point(cplx(1, 0), 5), Error);
}

TEST(Deform, IdentityAtZeroAndModuliOnly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 200; ++i) {
    auto p = curve_point(std::polar(2.5 * U(rng), 2 * M_PI * U(rng)), i % 5);
    for (auto cfg : {piecewise(0), smooth(0)}) {
      auto [y1, y2] = deform_point(p, cfg);
      EXPECT_EQ(y1, p.x1);
      EXPECT_EQ(y2, p.x2);
    }
    for (auto cfg : {piecewise(0.7), smooth(0.7)}) {
      auto [y1, y2] = deform_point(p, cfg);
      // Phases kept; moduli a function of the moduli alone.
      EXPECT_NEAR(std::arg(y1 / p.x1), 0.0, 1e-14);
      EXPECT_NEAR(std::arg(y2 / p.x2), 0.0, 1e-14);
      const cplx e1 = std::polar(1.0, 2 * M_PI * U(rng)), e2 = std::polar(1.0, 2 * M_PI * U(rng));
      auto w = deformation_weights(std::abs(p.x1), std::abs(p.x2), cfg);
      auto [z1, z2] = deform(p.x1 * e1, p.x2 * e2, w, cfg);
      EXPECT_NEAR(std::abs(z1), std::abs(y1), 1e-14 * std::abs(y1));
      EXPECT_NEAR(std::abs(z2), std::abs(y2), 1e-14 * std::abs(y2));
    }
  }
}

TEST(Deform, MatchesRegionFormulas) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 2000; ++i) {
    const double t = U(rng);
    auto p = curve_point(std::polar(std::tan(0.5 * M_PI * U(rng)), 2 * M_PI * U(rng)), i % 5);
    const int reg = isotopy_region(std::abs(p.x1), std::abs(p.x2));
    auto [y1, y2] = deform_point(p, piecewise(t));
    auto [o1, o2] = region_map(reg, p.x1, p.x2, t);
    EXPECT_LE(std::abs(y1 - o1), 1e-13 * std::abs(o1));
    EXPECT_LE(std::abs(y2 - o2), 1e-13 * std::abs(o2));
    // Uniform max form.
    const double r1 = std::abs(p.x1), r2 = std::abs(p.x2);
    const double m = std::max(r1, r2);
    EXPECT_LE(std::abs(y1 - std::pow(std::max(1.0, r2) / m, t) * p.x1), 1e-13 * std::abs(y1));
    EXPECT_LE(std::abs(y2 - std::pow(std::max(1.0, r1) / m, t) * p.x2), 1e-13 * std::abs(y2));
  }
}

TEST(Deform, SeamAgreement) {
  // Adjacent region maps on the three seams r1 = r2, r2 = 1, r1 = 1.
  struct Seam { int a, b; double r1, r2; };
  std::vector<Seam> seams;
  for (double s : {0.1, 0.4, 0.8, 0.95}) {
    seams.push_back({0, 1, s, s});
    seams.push_back({0, 2, s, 1.0});
    seams.push_back({1, 3, 1.0, s});
    seams.push_back({4, 5, 1 / s, 1 / s});
    seams.push_back({2, 5, 1.0, 1 / s});
    seams.push_back({3, 4, 1 / s, 1.0});
  }
  for (const auto& sm : seams)
    for (double t : {0.0, 0.3, 1.0}) {
      const cplx x1 = std::polar(sm.r1, 0.3), x2 = std::polar(sm.r2, 1.1);
      auto [a1, a2] = region_map(sm.a, x1, x2, t);
      auto [b1, b2] = region_map(sm.b, x1, x2, t);
      EXPECT_LE(std::abs(a1 - b1), 1e-12);
      EXPECT_LE(std::abs(a2 - b2), 1e-12);
      auto [y1, y2] = deform(x1, x2, deformation_weights(sm.r1, sm.r2, piecewise(t)), piecewise(t));
      EXPECT_LE(std::abs(y1 - a1), 1e-12);
      EXPECT_LE(std::abs(y2 - a2), 1e-12);
    }
}

TEST(Deform, GraphImageAtTimeOne) {
  auto pts = sample_curve(10000, 0.05, 21);
  for (const auto& p : pts) {
    auto [y1, y2] = deform_point(p, piecewise(1));
    auto img = classify(moment_map(affine({1.0, y1, y2})), LocusFamily::Graph, 1e-9);
    ASSERT_NE(img.tag, Stratum::Generic) << p.x1 << " " << p.x2;
    auto src = classify(moment_map(affine({1.0, p.x1, p.x2})), LocusFamily::Tilde, 1e-9);
    ASSERT_NE(src.tag, Stratum::Generic);
    // Coordinate lines x_i = 0 stay put.
    if (p.x1 == 0.0) EXPECT_EQ(y1, 0.0);
  }
}

TEST(Ratio, UndeformedIsFubiniStudy) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 500; ++i) {
    auto p = curve_point(std::polar(2 * U(rng), 2 * M_PI * U(rng)), i % 5);
    const double want = fs_ratio_undeformed(p.x1, p.x2);
    EXPECT_NEAR(closed_form_ratio(p, piecewise(0)), want, 1e-12 * want);
    EXPECT_NEAR(closed_form_ratio(p, smooth(0)), want, 1e-12 * want);
    EXPECT_GT(want, 0);
  }
}

TEST(Ratio, ClosedFormAgreesWithPullback) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(0, 1);
  for (auto variant : {IsotopyVariant::Piecewise, IsotopyVariant::Smooth}) {
    auto pts = sample_curve(10000, 0.05, 99);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto& p = pts[static_cast<std::size_t>(U(rng) * pts.size())];
      IsotopyConfig c = variant == IsotopyVariant::Piecewise ? piecewise(U(rng)) : smooth(U(rng));
      const double a = closed_form_ratio(p, c), b = pullback_ratio(p, c);
      worst = std::max(worst, std::abs(a - b) / std::abs(a));
    }
    EXPECT_LE(worst, 1e-6) << to_string(variant);
  }
}

TEST(Ratio, RegionZeroDisplay) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(0, 1);
  int n = 0;
  while (n < 300) {
    auto p = curve_point(std::polar(U(rng), 2 * M_PI * U(rng)), n % 5);
    if (isotopy_region(std::abs(p.x1), std::abs(p.x2)) != 0) continue;
    const double t = U(rng);
    const double a = piecewise_region0_ratio(p, t);
    EXPECT_NEAR(closed_form_ratio(p, piecewise(t)), a, 1e-12 * a);
    EXPECT_GE(a, 1.0 / 9.0);
    ++n;
  }
}

TEST(Ratio, MismatchIsReported) {
  auto p = curve_point(cplx(0.4, 0.3), 1);
  try {
    symplectic_ratio(p, piecewise(0.5), 1e-16);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FormulaMismatch);
  }
  EXPECT_NO_THROW(symplectic_ratio(p, piecewise(0.5)));
}

TEST(Ratio, SymmetryReduction) {
  // The ratio read in the canonical chart equals the original one times
  // |dx1/dx1'|^2, with the chart change differentiated by hand.
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 400; ++i) {
    auto p = curve_point(std::polar(std::tan(0.5 * M_PI * (0.05 + 0.9 * U(rng))), 2 * M_PI * U(rng)), i % 5);
    const std::array<cplx, 3> z{1.0, p.x1, p.x2};
    const std::array<cplx, 3> dz{0.0, 1.0, -std::pow(p.x1 / p.x2, 4)};
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(z[a]) > std::abs(z[b]); });
    const int hi = idx[0], lo = idx[2];
    const cplx jac = (dz[lo] * z[hi] - z[lo] * dz[hi]) / (z[hi] * z[hi]);
    const auto c = canonical_chart(p);
    EXPECT_LE(std::abs(c.x1), std::abs(c.x2) + 1e-15);
    EXPECT_LE(std::abs(c.x2), 1.0 + 1e-15);
    for (auto cfg : {piecewise(U(rng)), smooth(U(rng))}) {
      const double orig = closed_form_ratio(p, cfg);
      const double can = closed_form_ratio(c, cfg);
      EXPECT_NEAR(orig, can * std::norm(jac), 1e-10 * orig) << to_string(cfg.variant);
    }
  }
}

TEST(Smooth, TriplePointValue) {
  for (int i = 0; i <= 10; ++i) {
    const double t = i / 10.0;
    for (int k = 0; k < 5; ++k) {
      auto p = on_stratum_11(k);
      EXPECT_NEAR(symplectic_ratio(p, smooth(t)), (2 - t) / 6, 1e-9);
    }
  }
}

TEST(Smooth, EdgeStratum) {
  // r2 = 1, r1 <= 1 - eps.
  for (double r1 : {0.05, 0.3, 0.6, 0.9}) {
    const double A = std::pow(r1, 5);
    for (double sgn : {1.0, -1.0}) {
      const cplx x1 = std::polar(r1, sgn * std::acos(-0.5 * A) / 5);
      auto p = curve_point(x1, std::pow(-1.0 - std::pow(x1, 5), 0.2));
      ASSERT_NEAR(std::abs(p.x2), 1.0, 1e-14);
      for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double re = std::real(std::pow(p.x1, 5));
        const double want = ((1 - t) * std::pow(r1, 8) + 2 + t * re) / std::pow(2 + r1 * r1, 2);
        EXPECT_NEAR(symplectic_ratio(p, smooth(t)), want, 1e-12);
        EXPECT_GE(want, 1.0 / 9.0);
      }
    }
  }
}

TEST(Smooth, DiagonalBand) {
  const std::vector<double> tg{0, 0.25, 0.5, 0.75, 1};
  for (double eps : {0.1, 0.05, 0.025}) {
    auto b = smooth_band(eps, tg, 1500);
    EXPECT_EQ(b.samples, 1500);
    EXPECT_GE(b.min_ratio, 1.0 / 6.0 - 10 * eps);
    EXPECT_GE(b.degradation, 0.0);
  }
}

TEST(Sweep, PiecewiseBound) {
  auto r = positivity_sweep(piecewise(0));
  EXPECT_EQ(r.evaluations, 50000);
  EXPECT_TRUE(r.pass);
  for (double m : r.region_min) EXPECT_GE(m, 1.0 / 9.0 - 1e-9);
  EXPECT_LE(r.max_formula_gap, 1e-6);
}

TEST(Sweep, SmoothPositive) {
  auto r = positivity_sweep(smooth(0, 0.05));
  EXPECT_TRUE(r.pass);
  EXPECT_GT(r.min_ratio, 0.0);
  EXPECT_LE(r.max_formula_gap, 1e-6);
}

TEST(Sweep, CorruptedExponentFails) {
  IsotopyConfig c = piecewise(0);
  c.exponent_scale = 3;
  auto r = positivity_sweep(c);
  EXPECT_FALSE(r.pass);
  EXPECT_LT(r.min_ratio, 0.0);
  EXPECT_THROW(positivity_sweep(piecewise(0), SweepOptions{100}), Error);
}

TEST(Areas, SixEqualPieces) {
  for (double t : {0.0, 0.5, 1.0}) {
    auto a = region_areas(t);
    // Degree 5 curve, a line has area pi.
    EXPECT_NEAR(a.total, 5 * M_PI, 1e-3 * 5 * M_PI);
    EXPECT_LE(a.max_rel_dev, 1e-3);
    for (double x : a.areas) EXPECT_NEAR(x, a.total / 6, 1e-3 * a.total / 6);
  }
  EXPECT_NEAR(region_areas(0).total, region_areas(1).total, 1e-3 * 5 * M_PI);
}
