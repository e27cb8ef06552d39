#pragma once

#include <array>
#include <utility>
#include <vector>

#include <json.hpp>

#include "syzflow/core_geometry.hpp"
#include "syzflow/errors.hpp"

namespace syzflow {

enum class IsotopyVariant { Piecewise, Smooth };
const char* to_string(IsotopyVariant v);

// b(a) = (1 + B(a/eps))/2 with B odd, B = -1 below -1 and 1 above 1.
struct Cutoff {
  double eps = 0.05;
  double value(double a) const;
  double d1(double a) const;
};

struct IsotopyConfig {
  double t = 0.0;
  IsotopyVariant variant = IsotopyVariant::Piecewise;
  double eps = 0.05;
  // 1 for the real family; anything else is a deliberately wrong deformation.
  double exponent_scale = 1.0;
  Cutoff b() const { return Cutoff{eps}; }
};

// Point of x1^5 + x2^5 + 1 = 0.
struct CurvePoint {
  cplx x1, x2;
  int branch = 0;  // x1 = branch-th fifth root of -1 - x2^5
};

CurvePoint curve_point(cplx x2, int branch);
// Branch recovered from a given pair; throws OffVariety past 1e-10.
CurvePoint curve_point(cplx x1, cplx x2);

// lambda(a) = b(log a) + b'(log a) log a.
double cutoff_lambda(double a, const IsotopyConfig& cfg);

// rho_1 = r1^b1, rho_2 = r2^b2, rho_0 = r1^(1 - b0) r2^b0; lambda_i = b_i + b_i' log(.)
// Piecewise: the b_i are the region indicators [r1 > 1], [r2 > 1], [r2 > r1].
struct Weights {
  double b0 = 0, b1 = 0, b2 = 0;
  double l0 = 0, l1 = 0, l2 = 0;
};

Weights deformation_weights(double r1, double r2, const IsotopyConfig& cfg);
std::pair<cplx, cplx> deform(cplx x1, cplx x2, const Weights& w, const IsotopyConfig& cfg);
std::pair<cplx, cplx> deform_point(const CurvePoint& p, const IsotopyConfig& cfg);

// Regions of the chart: 0: 1>=r2>=r1, 1: 1>=r1>=r2, 2: r2>=1>=r1, 3: r1>=1>=r2,
// 4: r1>=r2>=1, 5: r2>=r1>=1.
int isotopy_region(double r1, double r2);

// omega|S_t / dx1 ^ dx1bar in the current chart.
double closed_form_ratio(const CurvePoint& p, const IsotopyConfig& cfg);
// Closed expression for region 0 of the piecewise family alone.
double piecewise_region0_ratio(const CurvePoint& p, double t);
// Central differences of deform_point along the curve (region frozen for the
// piecewise family), pulled back through the Fubini-Study matrix.
double pullback_ratio(const CurvePoint& p, const IsotopyConfig& cfg, double h = 1e-6);
// Both; throws FormulaMismatch when their relative gap exceeds tol.
double symplectic_ratio(const CurvePoint& p, const IsotopyConfig& cfg, double tol = 1e-6);

// Coordinate permutation of CP^2 bringing p to 1 >= r2 >= r1.
CurvePoint canonical_chart(const CurvePoint& p);
double canonical_ratio(const CurvePoint& p, const IsotopyConfig& cfg, double tol = 1e-6);

struct SweepOptions {
  int samples = 10000;
  std::vector<double> t_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  unsigned long long seed = 7;
  double pullback_tol = 1e-6;
};

struct PositivityReport {
  IsotopyVariant variant = IsotopyVariant::Piecewise;
  int samples = 0;
  int evaluations = 0;
  double min_ratio = 0.0;
  std::array<double, 6> region_min{};
  double max_formula_gap = 0.0;  // relative, closed form vs pullback
  double bound = 1.0 / 9.0;
  double degradation = 0.0;  // max(0, 1/6 - min)/eps, smooth family only
  bool pass = false;
};

std::vector<CurvePoint> sample_curve(int n, double eps, unsigned long long seed);
PositivityReport positivity_sweep(const IsotopyConfig& cfg, const SweepOptions& opts = {});

// Smooth family near the stratum r1 = r2 <= 1 - eps: min ratio over the band
// |log(r2/r1)| <= eps and C = max(0, 1/6 - min)/eps.
struct BandReport {
  double eps = 0.0;
  double min_ratio = 0.0;
  double degradation = 0.0;
  int samples = 0;
};

BandReport smooth_band(double eps, const std::vector<double>& t_grid, int samples = 4000,
                       unsigned long long seed = 5);

struct AreaReport {
  std::array<double, 6> areas{};
  double total = 0.0;
  double max_rel_dev = 0.0;  // max |area_i - total/6| / (total/6)
};

// Fubini-Study areas of the six pieces of S_t (piecewise family).
AreaReport region_areas(double t, double rel_tol = 1e-9);

nlohmann::json positivity_to_json(const PositivityReport& r);

}  // namespace syzflow
