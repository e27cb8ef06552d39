#pragma once

#include <random>
#include <vector>

#include "syzflow/core_geometry.hpp"

namespace syzflow {

// Smooth step psi: 0 for x <= 0, 1 for x >= 1, psi(x) + psi(1-x) = 1.
struct SmoothStep {
  static double value(double x);
  static double d1(double x);
  static double d2(double x);
  // Psi(x) = int_0^x psi, x in [0,1].
  static double primitive(double x);
  static double max_d1();
  static double max_d2();
};

// rho(y) = 1 for |y| <= 1, 0 for |y| >= 2.
struct Bump {
  static double value(double y);
  static double d1(double y);
  static double d2(double y);
  // int_{-2}^{xi} rho.
  static double primitive(double xi);
  static constexpr double total = 3.0;
};

// rho_c: 1 on |r| <= 1, |rho_c'|, |rho_c''| <= c, zero for |r| >= 1 + width.
class CutoffC {
 public:
  explicit CutoffC(double c);
  double c() const { return c_; }
  double width() const { return width_; }
  double support() const { return 1.0 + width_; }
  double value(double r) const;
  double d1(double r) const;
  double d2(double r) const;

 private:
  double c_;
  double width_;
};

// f_lambda with f' = lambda near 0 and f(r) = r for r >= a^2 e^{2|lambda-1|}.
class FLambda {
 public:
  FLambda(double lambda, double a);
  double lambda() const { return lambda_; }
  double a() const { return a_; }
  double c1() const { return c1_; }
  double c2() const { return c2_; }
  double band_lo() const { return lo_; }
  double band_hi() const { return hi_; }

  double value(double r) const;
  // f(r) - r, evaluated without cancellation.
  double excess(double r) const;
  double d1(double r) const;
  double d2(double r) const;

 private:
  double xi(double r) const;
  double Q(double xi) const;
  double tail_integral(double xi) const;  // int_xi^2 rho(y) e^{L y} dy
  double lambda_, a_, L_;
  double lo_ = 0.0, hi_ = 0.0;
  double c1_ = 0.0, c2_ = 0.0;
  double k0_ = 0.0;
};

struct ToroidalParams {
  std::vector<double> lambdas;
  std::vector<double> a;
  std::vector<double> eps;
};

class ToroidalMetric {
 public:
  explicit ToroidalMetric(ToroidalParams params);

  int dim() const { return static_cast<int>(params_.lambdas.size()); }
  const ToroidalParams& params() const { return params_; }
  const FLambda& f(int i) const { return f_[i]; }
  const CutoffC& cutoff(int i) const { return cut_[i]; }

  double R1() const { return R1_; }
  // Radius beyond which every term of R vanishes for the concrete cutoff.
  double R2() const { return R2_; }
  // max_i(a_i e^{|lambda_i-1|}, a_i/eps_i), the radius as usually quoted.
  double R2_quoted() const { return R2q_; }

  double potential(const CVec& z) const;
  // M_{jk} = d^2 R / dz_j dzbar_k.
  CMat ddbar(const CVec& z) const;
  CMat omega(const CVec& z, const MetricField& base) const;
  CMat omega(const CVec& z) const;

  MetricField as_metric_field(const MetricField& base) const;

 private:
  ToroidalParams params_;
  std::vector<FLambda> f_;
  std::vector<CutoffC> cut_;
  double R1_, R2_, R2q_;
};

// omega with a positivity check; throws NotPositive.
CMat omega_perturbed(const CVec& z, const ToroidalMetric& tm, const MetricField& base);

struct CertifyGrid {
  int transition_samples = 10000;
  int inner_samples = 200;
  int outer_samples = 200;
  double threshold = 0.0;  // required minimum eigenvalue
  unsigned long long seed = 1;
};

struct ToroidalReport {
  double min_eigenvalue = 0.0;
  double inner_residual = 0.0;   // max |omega - diag(lambda)| for |z| <= R1
  double outer_residual = 0.0;   // max |omega - base| for |z| >= R2
  double outer_residual_quoted = 0.0;  // same at the quoted radius
  double hermitian_residual = 0.0;
  double measured_C = 0.0;       // (min_i(lambda_i, 1/2) - min eig)/max eps
  double max_abs_c2 = 0.0;
  double max_c1_over_a2 = 0.0;
  double R1 = 0.0, R2 = 0.0, R2_quoted = 0.0;
  bool positive = false;
  bool regions_ok = false;
  bool pass = false;
};

ToroidalReport certify_toroidal(const ToroidalMetric& tm, const CertifyGrid& grid);

// Random point with prescribed moduli and uniform phases.
CVec torus_point(const std::vector<double>& radii, std::mt19937_64& rng);

}  // namespace syzflow
