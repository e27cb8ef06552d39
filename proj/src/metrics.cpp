#include "syzflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "syzflow/parallel.hpp"

namespace syzflow {

namespace {

double integrate(const std::function<double(double)>& f, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  thread_local boost::math::quadrature::tanh_sinh<double> ts;
  double err = 0.0;
  return ts.integrate(f, lo, hi, 1e-15, &err);
}

// psi(1 - psi) and psi, both from u = 1/x - 1/(1-x).
void logistic_parts(double x, double& psi, double& s1) {
  const double u = 1.0 / x - 1.0 / (1.0 - x);
  const double e = std::exp(-std::abs(u));
  const double denom = 1.0 + e;
  psi = (u > 0) ? e / denom : 1.0 / denom;
  s1 = e / (denom * denom);
}

}  // namespace

double SmoothStep::value(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double psi, s1;
  logistic_parts(x, psi, s1);
  return psi;
}

double SmoothStep::d1(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  double psi, s1;
  logistic_parts(x, psi, s1);
  if (s1 == 0.0) return 0.0;
  const double y = 1.0 - x;
  return s1 * (1.0 / (x * x) + 1.0 / (y * y));
}

double SmoothStep::d2(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  double psi, s1;
  logistic_parts(x, psi, s1);
  if (s1 == 0.0) return 0.0;
  const double y = 1.0 - x;
  const double w = 1.0 / (x * x) + 1.0 / (y * y);
  const double dw = -2.0 / (x * x * x) + 2.0 / (y * y * y);
  return s1 * w * w * (1.0 - 2.0 * psi) + s1 * dw;
}

double SmoothStep::primitive(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return x - 0.5;
  if (x > 0.5) return x - 0.5 + primitive(1.0 - x);
  return integrate([](double t) { return SmoothStep::value(t); }, 0.0, x);
}

namespace {

template <class F>
double sampled_max(F f) {
  double m = 0.0;
  const int N = 200000;
  for (int i = 1; i < N; ++i) m = std::max(m, std::abs(f(static_cast<double>(i) / N)));
  return m;
}

}  // namespace

double SmoothStep::max_d1() {
  static const double m = sampled_max([](double x) { return SmoothStep::d1(x); });
  return m;
}

double SmoothStep::max_d2() {
  // Sampled maximum inflated slightly to cover the gaps between samples.
  static const double m = 1.001 * sampled_max([](double x) { return SmoothStep::d2(x); });
  return m;
}

double Bump::value(double y) { return 1.0 - SmoothStep::value(std::abs(y) - 1.0); }

double Bump::d1(double y) {
  const double s = (y > 0) ? 1.0 : -1.0;
  return -s * SmoothStep::d1(std::abs(y) - 1.0);
}

double Bump::d2(double y) { return -SmoothStep::d2(std::abs(y) - 1.0); }

double Bump::primitive(double xi) {
  if (xi <= -2.0) return 0.0;
  if (xi <= -1.0) return SmoothStep::primitive(xi + 2.0);
  if (xi <= 1.0) return 0.5 + (xi + 1.0);
  if (xi <= 2.0) return 2.5 + (xi - 1.0) - SmoothStep::primitive(xi - 1.0);
  return total;
}

CutoffC::CutoffC(double c) : c_(c) {
  if (!(c > 0)) throw Error(ErrorKind::InvalidArgument, "cutoff slope bound must be positive");
  width_ = std::max(SmoothStep::max_d1() / c, std::sqrt(SmoothStep::max_d2() / c));
}

double CutoffC::value(double r) const { return 1.0 - SmoothStep::value((std::abs(r) - 1.0) / width_); }

double CutoffC::d1(double r) const {
  const double s = (r > 0) ? 1.0 : -1.0;
  return -s * SmoothStep::d1((std::abs(r) - 1.0) / width_) / width_;
}

double CutoffC::d2(double r) const {
  return -SmoothStep::d2((std::abs(r) - 1.0) / width_) / (width_ * width_);
}

FLambda::FLambda(double lambda, double a) : lambda_(lambda), a_(a), L_(std::abs(lambda - 1.0)) {
  if (!(lambda > 0) || !(a > 0)) throw Error(ErrorKind::InvalidArgument, "f_lambda needs lambda, a > 0");
  lo_ = a * a * std::exp(-2.0 * L_);
  hi_ = a * a * std::exp(2.0 * L_);
  if (L_ == 0.0) return;
  c2_ = (lambda > 1.0 ? 2.0 : -2.0) / Bump::total;
  k0_ = a * a / Bump::total * tail_integral(-2.0);
  c1_ = (1.0 - lambda) * k0_;
}

double FLambda::xi(double r) const { return (std::log(r) - 2.0 * std::log(a_)) / L_; }

double FLambda::Q(double x) const { return Bump::primitive(x) / Bump::total; }

double FLambda::tail_integral(double x) const {
  const double L = L_;
  auto f = [L](double y) { return Bump::value(y) * std::exp(L * y); };
  double sum = 0.0;
  if (x < -1.0) sum += integrate(f, x, -1.0);
  const double m = std::clamp(x, -1.0, 1.0);
  sum += (std::exp(L) - std::exp(L * m)) / L;
  sum += integrate(f, std::max(x, 1.0), 2.0);
  return sum;
}

double FLambda::excess(double r) const {
  if (L_ == 0.0 || r >= hi_) return 0.0;
  if (r <= lo_) return (1.0 - lambda_) * (k0_ - r);
  const double x = xi(r);
  const double K = -r * (1.0 - Q(x)) + a_ * a_ / Bump::total * tail_integral(x);
  return (1.0 - lambda_) * K;
}

double FLambda::value(double r) const { return r + excess(r); }

double FLambda::d1(double r) const {
  if (L_ == 0.0 || r >= hi_) return 1.0;
  if (r <= lo_) return lambda_;
  return lambda_ + (1.0 - lambda_) * Q(xi(r));
}

double FLambda::d2(double r) const {
  if (L_ == 0.0 || r >= hi_ || r <= lo_) return 0.0;
  return (1.0 - lambda_) * Bump::value(xi(r)) / (Bump::total * L_ * r);
}

ToroidalMetric::ToroidalMetric(ToroidalParams params) : params_(std::move(params)) {
  const size_t n = params_.lambdas.size();
  if (n == 0 || params_.a.size() != n || params_.eps.size() != n)
    throw Error(ErrorKind::InvalidArgument, "lambdas, a, eps must have equal nonzero length");
  R1_ = std::numeric_limits<double>::infinity();
  R2_ = 0.0;
  R2q_ = 0.0;
  for (size_t i = 0; i < n; ++i) {
    f_.emplace_back(params_.lambdas[i], params_.a[i]);
    cut_.emplace_back(params_.eps[i]);
    const double L = std::abs(params_.lambdas[i] - 1.0);
    const double a = params_.a[i];
    R1_ = std::min(R1_, a * std::exp(-L));
    const double s = cut_.back().support();
    R2_ = std::max(R2_, a * std::sqrt(std::exp(2.0 * L) + s * s));
    R2q_ = std::max({R2q_, a * std::exp(L), a / params_.eps[i]});
  }
}

double ToroidalMetric::potential(const CVec& z) const {
  const double total = z.squaredNorm();
  double R = 0.0;
  for (int i = 0; i < dim(); ++i) {
    const double r = std::norm(z(i));
    const double F = f_[i].excess(r);
    if (F == 0.0) continue;
    const double tau = std::sqrt(std::max(0.0, total - r));
    R += cut_[i].value(tau / params_.a[i]) * F;
  }
  return R;
}

CMat ToroidalMetric::ddbar(const CVec& z) const {
  const int n = dim();
  CMat M = CMat::Zero(n, n);
  double total = 0.0;
  for (int j = 0; j < n; ++j) total += std::norm(z(j));
  for (int i = 0; i < n; ++i) {
    const double r = std::norm(z(i));
    const double F = f_[i].excess(r);
    const double Fp = f_[i].d1(r) - 1.0;
    const double Fpp = f_[i].d2(r);
    if (F == 0.0 && Fp == 0.0 && Fpp == 0.0) continue;
    double tau2 = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) tau2 += std::norm(z(j));
    const double tau = std::sqrt(tau2);
    const double a = params_.a[i];
    const double u = tau / a;
    const double phi = cut_[i].value(u);
    double h1 = 0.0, h2 = 0.0;
    if (u > 1.0) {
      const double p1 = cut_[i].d1(u), p2 = cut_[i].d2(u);
      h1 = p1 / (2.0 * a * tau);
      h2 = p2 / (4.0 * a * a * tau2) - p1 / (4.0 * a * tau2 * tau);
    }
    M(i, i) += phi * (Fp + r * Fpp);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      M(j, i) += h1 * std::conj(z(j)) * Fp * z(i);
      M(i, j) += Fp * std::conj(z(i)) * h1 * z(j);
      for (int k = 0; k < n; ++k) {
        if (k == i) continue;
        M(j, k) += F * ((j == k ? h1 : 0.0) + h2 * std::conj(z(j)) * z(k));
      }
    }
  }
  return M;
}

CMat ToroidalMetric::omega(const CVec& z, const MetricField& base) const {
  return base(affine(z)) + ddbar(z);
}

CMat ToroidalMetric::omega(const CVec& z) const { return omega(z, flat_metric()); }

MetricField ToroidalMetric::as_metric_field(const MetricField& base) const {
  ToroidalMetric copy = *this;
  return MetricField{MetricField::Kind::Toroidal,
                     [copy, base](const AffinePoint& pt) -> CMat { return copy.omega(pt.coords, base); }};
}

CMat omega_perturbed(const CVec& z, const ToroidalMetric& tm, const MetricField& base) {
  CMat w = tm.omega(z, base);
  Eigen::SelfAdjointEigenSolver<CMat> es(w, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0))
    throw Error(ErrorKind::NotPositive, "perturbed form is not positive");
  return w;
}

CVec torus_point(const std::vector<double>& radii, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
  CVec z(static_cast<Eigen::Index>(radii.size()));
  for (size_t i = 0; i < radii.size(); ++i) z(static_cast<Eigen::Index>(i)) = std::polar(radii[i], ph(rng));
  return z;
}

namespace {

std::mt19937_64 indexed_rng(unsigned long long seed, size_t i, unsigned long long stream) {
  std::seed_seq seq{seed, static_cast<unsigned long long>(i), stream};
  return std::mt19937_64(seq);
}

CVec random_direction(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVec v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
  return v / v.norm();
}

double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

ToroidalReport certify_toroidal(const ToroidalMetric& tm, const CertifyGrid& grid) {
  const int n = tm.dim();
  const auto& P = tm.params();
  ToroidalReport rep;
  rep.R1 = tm.R1();
  rep.R2 = tm.R2();
  rep.R2_quoted = tm.R2_quoted();
  for (int i = 0; i < n; ++i) {
    rep.max_abs_c2 = std::max(rep.max_abs_c2, std::abs(tm.f(i).c2()));
    rep.max_c1_over_a2 = std::max(rep.max_c1_over_a2, std::abs(tm.f(i).c1()) / (P.a[i] * P.a[i]));
  }

  const size_t NT = static_cast<size_t>(grid.transition_samples);
  std::vector<double> mins(NT), herm(NT);
  const double lo = std::log(tm.R1() / 4.0), hi = std::log(tm.R2());
  parallel_for(NT, [&](size_t k) {
    auto rng = indexed_rng(grid.seed, k, 1);
    std::uniform_real_distribution<double> U(lo, hi);
    std::vector<double> radii(n);
    for (int i = 0; i < n; ++i) radii[i] = std::exp(U(rng));
    CMat w = tm.omega(torus_point(radii, rng));
    herm[k] = max_abs(w - w.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(w, Eigen::EigenvaluesOnly);
    mins[k] = es.eigenvalues().minCoeff();
  });
  rep.min_eigenvalue = NT ? *std::min_element(mins.begin(), mins.end()) : 0.0;
  rep.hermitian_residual = NT ? *std::max_element(herm.begin(), herm.end()) : 0.0;

  CMat target = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i) target(i, i) = P.lambdas[i];
  for (int k = 0; k < grid.inner_samples; ++k) {
    auto rng = indexed_rng(grid.seed, static_cast<size_t>(k), 2);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double rad = tm.R1() * (k == 0 ? 1.0 : (k == 1 ? 0.5 : U(rng)));
    CVec z = rad * random_direction(n, rng);
    rep.inner_residual = std::max(rep.inner_residual, max_abs(tm.omega(z) - target));
  }
  // Half of the outer samples put one coordinate inside its f_lambda band, where
  // only the cutoff can make the term vanish.
  auto outer_point = [&](double rad, int k, std::mt19937_64& rng) -> CVec {
    if (k % 2 == 0) return rad * random_direction(n, rng);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int i = static_cast<int>(rng() % static_cast<unsigned long long>(n));
    const double zi = std::min(rad, std::sqrt(tm.f(i).band_hi()) * U(rng));
    CVec z = random_direction(n, rng);
    z(i) = 0.0;
    z *= std::sqrt(std::max(0.0, rad * rad - zi * zi)) / std::max(z.norm(), 1e-300);
    z(i) = std::polar(zi, 2.0 * std::numbers::pi * U(rng));
    return z;
  };
  for (int k = 0; k < grid.outer_samples; ++k) {
    auto rng = indexed_rng(grid.seed, static_cast<size_t>(k), 3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double rad = tm.R2() * (k < 2 ? 1.0 : (k < 4 ? 2.0 : 1.0 + U(rng)));
    CVec z = outer_point(rad, k, rng);
    rep.outer_residual = std::max(rep.outer_residual, max_abs(tm.omega(z) - CMat::Identity(n, n)));
    if (tm.R2_quoted() < tm.R2()) {
      double rq = tm.R2_quoted() + (tm.R2() - tm.R2_quoted()) * U(rng);
      CVec zq = outer_point(rq, k, rng);
      rep.outer_residual_quoted =
          std::max(rep.outer_residual_quoted, max_abs(tm.omega(zq) - CMat::Identity(n, n)));
    }
  }

  double floor_bound = std::numeric_limits<double>::infinity(), max_eps = 0.0;
  for (int i = 0; i < n; ++i) {
    floor_bound = std::min(floor_bound, std::min(P.lambdas[i], 0.5));
    max_eps = std::max(max_eps, P.eps[i]);
  }
  rep.measured_C = std::max(0.0, floor_bound - rep.min_eigenvalue) / max_eps;
  rep.positive = rep.min_eigenvalue > std::max(0.0, grid.threshold);
  rep.regions_ok = rep.inner_residual <= 1e-12 && rep.outer_residual <= 1e-12 &&
                   rep.hermitian_residual <= 1e-14;
  rep.pass = rep.positive && rep.regions_ok;
  return rep;
}

}  // namespace syzflow
