#include "syzflow/isotopy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "syzflow/fibration.hpp"
#include "syzflow/metrics.hpp"
#include "syzflow/parallel.hpp"

namespace syzflow {

const char* to_string(IsotopyVariant v) {
  return v == IsotopyVariant::Piecewise ? "piecewise" : "smooth";
}

namespace {

// Odd by construction, so b(a) + b(-a) = 1 up to one rounding.
double odd_step(double x) { return SmoothStep::value(0.5 * (1 + x)) - SmoothStep::value(0.5 * (1 - x)); }
double odd_step_d1(double x) {
  return 0.5 * (SmoothStep::d1(0.5 * (1 + x)) + SmoothStep::d1(0.5 * (1 - x)));
}

cplx fifth_root(cplx w, int branch) {
  return std::polar(std::pow(std::abs(w), 0.2), (std::arg(w) + 2 * M_PI * branch) / 5);
}

cplx p5(cplx z) {
  const cplx z2 = z * z;
  return z2 * z2 * z;
}

Weights region_weights(int region) {
  static constexpr std::array<std::array<double, 3>, 6> ind{{
      {1, 0, 0}, {0, 0, 0}, {1, 0, 1}, {0, 1, 0}, {0, 1, 1}, {1, 1, 1}}};
  const auto& b = ind[region];
  return Weights{b[0], b[1], b[2], b[0], b[1], b[2]};
}

double closed_ratio(cplx x1, cplx x2, const Weights& w, const IsotopyConfig& cfg) {
  const double te = cfg.t * cfg.exponent_scale;
  const double r1 = std::abs(x1), r2 = std::abs(x2);
  const double rho1 = std::pow(r1, w.b1), rho2 = std::pow(r2, w.b2);
  const double rho0 = std::pow(r1, 1 - w.b0) * std::pow(r2, w.b0);
  const double s1 = std::pow(rho2 / rho0, te), s2 = std::pow(rho1 / rho0, te);
  const cplx a = p5(x1), b = p5(x2);
  // (r1/r2)^8 Re((x2/x1)^5) and Re((x1/x2)^5) in polar form, safe at r1 -> 0.
  const double r2_8 = std::pow(r2, 8);
  const double c5 = std::cos(5 * (std::arg(x2) - std::arg(x1)));
  const double mixed21 = std::pow(r1 / r2, 3) * c5;
  const double mixed12 = std::pow(r1 / r2, 5) * c5;
  const double q8 = std::pow(r1 / r2, 8);
  const double term2 = s2 * s2 * ((1 - w.l0 * te) * q8 + (1 - w.l0 - w.l1) * te * mixed21);
  const double term1 = s1 * s1 * (1 - (1 - w.l0) * te + (w.l0 - w.l2) * te * mixed12);
  const double term3 = std::pow(s1 * s2, 2) / r2_8 * (1 + te * (w.l2 * a.real() + w.l1 * b.real()));
  const double den = 1 + s2 * s2 * r2 * r2 + s1 * s1 * r1 * r1;
  return (term1 + term2 + term3) / (den * den);
}

}  // namespace

double Cutoff::value(double a) const { return 0.5 * (1 + odd_step(a / eps)); }
double Cutoff::d1(double a) const { return 0.5 * odd_step_d1(a / eps) / eps; }

CurvePoint curve_point(cplx x2, int branch) {
  if (branch < 0 || branch > 4) throw Error(ErrorKind::InvalidArgument, "branch must be in 0..4");
  return CurvePoint{fifth_root(-1.0 - p5(x2), branch), x2, branch};
}

CurvePoint curve_point(cplx x1, cplx x2) {
  const double res = std::abs(p5(x1) + p5(x2) + 1.0);
  if (res > 1e-10 * std::max(1.0, std::norm(x1) * std::norm(x1) * std::abs(x1)))
    throw Error(ErrorKind::OffVariety, "point is not on x1^5 + x2^5 + 1 = 0");
  int best = 0;
  double dmin = std::numeric_limits<double>::infinity();
  const cplx w = -1.0 - p5(x2);
  for (int k = 0; k < 5; ++k) {
    const double d = std::abs(fifth_root(w, k) - x1);
    if (d < dmin) dmin = d, best = k;
  }
  return CurvePoint{x1, x2, best};
}

double cutoff_lambda(double a, const IsotopyConfig& cfg) {
  if (!(a > 0)) throw Error(ErrorKind::NotPositive, "cutoff_lambda needs a > 0");
  const double la = std::log(a);
  if (la <= -cfg.eps) return 0.0;
  if (la >= cfg.eps) return 1.0;
  const Cutoff b = cfg.b();
  return b.value(la) + b.d1(la) * la;
}

int isotopy_region(double r1, double r2) {
  if (r1 <= r2) return r2 <= 1 ? 0 : (r1 <= 1 ? 2 : 5);
  return r1 <= 1 ? 1 : (r2 <= 1 ? 3 : 4);
}

Weights deformation_weights(double r1, double r2, const IsotopyConfig& cfg) {
  if (cfg.variant == IsotopyVariant::Piecewise) return region_weights(isotopy_region(r1, r2));
  const Cutoff b = cfg.b();
  auto lam = [&](double la) {
    if (!std::isfinite(la) || std::abs(la) >= cfg.eps) return la > 0 ? 1.0 : 0.0;
    return b.value(la) + b.d1(la) * la;
  };
  const double l1 = std::log(r1), l2 = std::log(r2), l0 = l2 - l1;
  return Weights{b.value(l0), b.value(l1), b.value(l2), lam(l0), lam(l1), lam(l2)};
}

std::pair<cplx, cplx> deform(cplx x1, cplx x2, const Weights& w, const IsotopyConfig& cfg) {
  const double te = cfg.t * cfg.exponent_scale;
  if (te == 0.0) return {x1, x2};
  const double r1 = std::abs(x1), r2 = std::abs(x2);
  const double rho1 = std::pow(r1, w.b1), rho2 = std::pow(r2, w.b2);
  const double rho0 = std::pow(r1, 1 - w.b0) * std::pow(r2, w.b0);
  return {std::pow(rho2 / rho0, te) * x1, std::pow(rho1 / rho0, te) * x2};
}

std::pair<cplx, cplx> deform_point(const CurvePoint& p, const IsotopyConfig& cfg) {
  return deform(p.x1, p.x2, deformation_weights(std::abs(p.x1), std::abs(p.x2), cfg), cfg);
}

double closed_form_ratio(const CurvePoint& p, const IsotopyConfig& cfg) {
  return closed_ratio(p.x1, p.x2, deformation_weights(std::abs(p.x1), std::abs(p.x2), cfg), cfg);
}

double piecewise_region0_ratio(const CurvePoint& p, double t) {
  const double r1 = std::abs(p.x1), r2 = std::abs(p.x2);
  const double s = std::pow(r2, -2 * t);
  const double re = std::real(p5(p.x1 / p.x2));
  const double num = (1 - t) * s * std::pow(r1 / r2, 8) + s * (1 + t * re) + std::pow(r2, -4 * t - 8);
  const double den = 1 + std::pow(r2, 2 - 2 * t) + std::pow(r1 / r2, 2 * t) * std::pow(r1, 2 - 2 * t);
  return num / (den * den);
}

double pullback_ratio(const CurvePoint& p, const IsotopyConfig& cfg, double h) {
  const double r1 = std::abs(p.x1), r2 = std::abs(p.x2);
  const bool by_x1 = r1 <= r2;
  const cplx xp = by_x1 ? p.x1 : p.x2;
  const cplx xo = by_x1 ? p.x2 : p.x1;
  const cplx wc = -1.0 - p5(xp);
  const bool frozen = cfg.variant == IsotopyVariant::Piecewise;
  const Weights wf = deformation_weights(r1, r2, cfg);
  h *= std::max(1.0, std::abs(xp));
  auto eval = [&](cplx d) {
    const cplx q = xp + d;
    const cplx o = xo * std::pow((-1.0 - p5(q)) / wc, 0.2);
    const cplx x1 = by_x1 ? q : o, x2 = by_x1 ? o : q;
    const Weights w = frozen ? wf : deformation_weights(std::abs(x1), std::abs(x2), cfg);
    auto [y1, y2] = deform(x1, x2, w, cfg);
    CVec y(2);
    y << y1, y2;
    return y;
  };
  const CVec yu = (eval(h) - eval(-h)) / (2 * h);
  const CVec yv = (eval(cplx(0, h)) - eval(cplx(0, -h))) / (2 * h);
  const CVec P = 0.5 * (yu - cplx(0, 1) * yv), Q = 0.5 * (yu + cplx(0, 1) * yv);
  const CMat g = fubini_study_matrix(eval(0.0));
  const double J = std::real(P.dot(g.transpose() * P)) - std::real(Q.dot(g.transpose() * Q));
  return by_x1 ? J : J * std::pow(r1 / r2, 8);
}

double symplectic_ratio(const CurvePoint& p, const IsotopyConfig& cfg, double tol) {
  const double c = closed_form_ratio(p, cfg), n = pullback_ratio(p, cfg);
  if (!(std::abs(c - n) <= tol * std::abs(c)))
    throw Error(ErrorKind::FormulaMismatch, "closed form " + std::to_string(c) + " vs pullback " + std::to_string(n));
  return c;
}

CurvePoint canonical_chart(const CurvePoint& p) {
  std::array<cplx, 3> z{1.0, p.x1, p.x2};
  std::array<int, 3> idx{0, 1, 2};
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(z[a]) > std::abs(z[b]); });
  // z[idx[0]] largest, z[idx[2]] smallest.
  const cplx x1 = z[idx[2]] / z[idx[0]], x2 = z[idx[1]] / z[idx[0]];
  return curve_point(x1, x2);
}

double canonical_ratio(const CurvePoint& p, const IsotopyConfig& cfg, double tol) {
  return symplectic_ratio(canonical_chart(p), cfg, tol);
}

std::vector<CurvePoint> sample_curve(int n, double eps, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> branch(0, 4);
  std::vector<CurvePoint> out;
  out.reserve(n);
  const int main = n - 3 * n / 10;
  for (int i = 0; i < main; ++i) {
    const double u = (i + U(rng)) / main;
    const double r = std::tan(0.5 * M_PI * u);
    const cplx x = std::polar(r, 2 * M_PI * U(rng));
    const CurvePoint c = curve_point(x, branch(rng));
    out.push_back(i % 2 ? c : CurvePoint{c.x2, c.x1, 0});
  }
  // Near the seams and the triple point.
  const double w = 2 * eps;
  while (static_cast<int>(out.size()) < n) {
    double r1, r2;
    const double s = U(rng);
    switch (static_cast<int>(out.size()) % 4) {
      case 0: r1 = r2 = std::pow(0.5, 0.2) + s * 2.5; break;
      case 1: r2 = 1; r1 = s * std::pow(2.0, 0.2); break;
      case 2: r1 = 1; r2 = s * std::pow(2.0, 0.2); break;
      default: r1 = r2 = 1; break;
    }
    r1 = std::max(0.0, r1 + w * (2 * U(rng) - 1));
    r2 = std::max(0.0, r2 + w * (2 * U(rng) - 1));
    if (gamma_tilde_membership(r1, r2).tag != Stratum::Tilde2) continue;
    const auto ph = sigma_fiber_phases(r1, r2);
    const auto [t1, t2] = ph[std::uniform_int_distribution<std::size_t>(0, ph.size() - 1)(rng)];
    out.push_back(curve_point(std::polar(r1, t1), std::polar(r2, t2)));
  }
  return out;
}

PositivityReport positivity_sweep(const IsotopyConfig& cfg, const SweepOptions& opts) {
  if (opts.samples < 10000) throw Error(ErrorKind::InvalidArgument, "positivity sweep needs at least 1e4 samples");
  const auto pts = sample_curve(opts.samples, cfg.eps, opts.seed);
  const int nt = static_cast<int>(opts.t_grid.size());
  std::vector<double> mins(pts.size()), gaps(pts.size());
  std::vector<int> regions(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    const CurvePoint c = canonical_chart(pts[i]);
    regions[i] = isotopy_region(std::abs(pts[i].x1), std::abs(pts[i].x2));
    double m = std::numeric_limits<double>::infinity(), g = 0;
    for (double t : opts.t_grid) {
      IsotopyConfig k = cfg;
      k.t = t;
      const double a = closed_form_ratio(c, k), b = pullback_ratio(c, k);
      m = std::min(m, a);
      g = std::max(g, std::abs(a - b) / std::abs(a));
    }
    mins[i] = m;
    gaps[i] = g;
  });
  PositivityReport r;
  r.variant = cfg.variant;
  r.samples = static_cast<int>(pts.size());
  r.evaluations = r.samples * nt;
  r.region_min.fill(std::numeric_limits<double>::infinity());
  r.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    r.min_ratio = std::min(r.min_ratio, mins[i]);
    r.region_min[regions[i]] = std::min(r.region_min[regions[i]], mins[i]);
    r.max_formula_gap = std::max(r.max_formula_gap, gaps[i]);
  }
  r.bound = 1.0 / 9.0;
  if (cfg.variant == IsotopyVariant::Smooth) r.degradation = std::max(0.0, 1.0 / 6.0 - r.min_ratio) / cfg.eps;
  r.pass = r.min_ratio >= r.bound - 1e-9 && r.max_formula_gap <= opts.pullback_tol;
  return r;
}

BandReport smooth_band(double eps, const std::vector<double>& t_grid, int samples, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  IsotopyConfig cfg;
  cfg.variant = IsotopyVariant::Smooth;
  cfg.eps = eps;
  BandReport rep;
  rep.eps = eps;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  const double rlo = std::pow(0.5, 0.2) * std::exp(eps), rhi = (1 - eps) * std::exp(-eps);
  while (rep.samples < samples) {
    // Foot point on the diagonal, then a step of at most eps in log(r2/r1).
    const double r = rlo + (rhi - rlo) * U(rng);
    const double d = eps * (2 * U(rng) - 1);
    const double r1 = r * std::exp(-0.5 * d), r2 = r * std::exp(0.5 * d);
    if (gamma_tilde_membership(r1, r2).tag != Stratum::Tilde2) continue;
    const auto ph = sigma_fiber_phases(r1, r2);
    const auto [t1, t2] = ph[std::uniform_int_distribution<std::size_t>(0, ph.size() - 1)(rng)];
    const CurvePoint p = curve_point(std::polar(r1, t1), std::polar(r2, t2));
    for (double t : t_grid) {
      cfg.t = t;
      rep.min_ratio = std::min(rep.min_ratio, symplectic_ratio(p, cfg));
    }
    ++rep.samples;
  }
  rep.degradation = std::max(0.0, 1.0 / 6.0 - rep.min_ratio) / eps;
  return rep;
}

AreaReport region_areas(double t, double rel_tol) {
  using boost::math::quadrature::gauss_kronrod;
  IsotopyConfig cfg;
  cfg.t = t;
  auto psi1 = [](double A) { return std::acos(-0.5 * A); };
  auto psi_eq = [](double A) { return std::acos(std::max(-1.0, -0.5 / A)); };
  AreaReport rep;
  for (int region = 0; region < 6; ++region) {
    // Param in the smaller coordinate; regions 1, 3, 4 mirror 0, 2, 5.
    const bool by_x1 = region == 0 || region == 2 || region == 5;
    const int mirror = by_x1 ? region : (region == 1 ? 0 : region == 3 ? 2 : 5);
    const Weights w = region_weights(region);
    const Weights ws{1 - w.b0, w.b2, w.b1, 1 - w.l0, w.l2, w.l1};
    auto J = [&](double r, double psi) {
      const cplx xp = std::polar(r, psi / 5);
      const cplx xo = fifth_root(-1.0 - p5(xp), 0);
      const cplx x1 = by_x1 ? xp : xo, x2 = by_x1 ? xo : xp;
      // Against dx2 ^ dx2bar: the same expression with the coordinates swapped.
      return by_x1 ? closed_ratio(x1, x2, w, cfg) : closed_ratio(x2, x1, ws, cfg);
    };
    double err_max = 0;
    auto inner = [&](double r) {
      if (r == 0) return 0.0;
      const double A = std::pow(r, 5);
      double lo = 0, hi = 0;
      if (mirror == 0) lo = psi1(A), hi = psi_eq(A);
      else if (mirror == 2) lo = 0, hi = psi1(A);
      else lo = 0, hi = psi_eq(A);
      if (hi <= lo) return 0.0;
      // Slivers next to the corner r = 1: the GK error estimate floors out there.
      if (hi - lo < 1e-6) return r * (hi - lo) * J(r, 0.5 * (lo + hi));
      double err = 0;
      const double v = gauss_kronrod<double, 31>::integrate([&](double p) { return J(r, p); }, lo, hi, 15, rel_tol, &err);
      err_max = std::max(err_max, err);
      return r * v;
    };
    double total = 0, err = 0;
    std::vector<std::pair<double, double>> pieces;
    if (mirror == 0) pieces = {{0.0, std::pow(0.5, 0.2)}, {std::pow(0.5, 0.2), 1.0}};
    else if (mirror == 2) pieces = {{0.0, 1.0}};
    else pieces = {{1.0, std::numeric_limits<double>::infinity()}};
    // The inner range closes like a square root at r = 1; tanh-sinh takes the
    // endpoint behaviour, Gauss-Kronrod the infinite piece.
    for (auto [a, b] : pieces) {
      double e = 0;
      const double v = std::isfinite(b) ? boost::math::quadrature::tanh_sinh<double>().integrate(inner, a, b, rel_tol, &e)
                                        : gauss_kronrod<double, 31>::integrate(inner, a, b, 15, rel_tol, &e);
      total += v;
      err += e;
    }
    const double area = 10 * total;
    // Inner errors are absolute; the radial weight is at most r <= 1 except in
    // the unbounded pieces, where the integrand decays.
    if (!std::isfinite(area) || err > 1e-6 * std::abs(total) || err_max > 1e-6 * std::abs(total))
      throw Error(ErrorKind::QuadratureNonconvergence, "region " + std::to_string(region) + " area did not converge (" + std::to_string(total) + " +- " + std::to_string(std::max(err, err_max)) + ")");
    rep.areas[region] = area;
    rep.total += area;
  }
  for (double a : rep.areas) rep.max_rel_dev = std::max(rep.max_rel_dev, std::abs(a - rep.total / 6) / (rep.total / 6));
  return rep;
}

nlohmann::json positivity_to_json(const PositivityReport& r) {
  return {{"variant", to_string(r.variant)},
          {"samples", r.samples},
          {"evaluations", r.evaluations},
          {"min_ratio", r.min_ratio},
          {"region_min", r.region_min},
          {"max_formula_gap", r.max_formula_gap},
          {"bound", r.bound},
          {"degradation", r.degradation},
          {"pass", r.pass}};
}

}  // namespace syzflow
