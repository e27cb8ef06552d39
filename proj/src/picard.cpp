#include "syzflow/picard.hpp"

#include <cmath>
#include <complex>
#include <random>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/numeric/odeint.hpp>
#include <Eigen/Eigenvalues>

namespace syzflow {

namespace {

using cplx = std::complex<double>;
using GL = boost::math::quadrature::gauss<double, 40>;

// Nodes and weights of 40-point Gauss-Legendre on [0, 1].
struct Rule {
  std::vector<double> x, w;
  Rule() {
    const auto& a = GL::abscissa();
    const auto& wt = GL::weights();
    for (size_t i = 0; i < a.size(); ++i) {
      x.push_back(0.5 * (1 + a[i]));
      w.push_back(0.5 * wt[i]);
      if (a[i] != 0.0) {
        x.push_back(0.5 * (1 - a[i]));
        w.push_back(0.5 * wt[i]);
      }
    }
  }
};

const Rule& rule() {
  static const Rule r;
  return r;
}

// u = v^kQ removes most of the algebraic endpoint behaviour of u^H.
constexpr int kQ = 4;

struct Eig {
  Eigen::VectorXcd lam;
  Eigen::MatrixXcd P, Pinv;
  explicit Eig(const RMat& H) {
    Eigen::EigenSolver<RMat> es(H);
    lam = es.eigenvalues();
    P = es.eigenvectors();
    Pinv = P.inverse();
  }
  // u^H x
  RVec apply(double u, const RVec& x) const {
    Eigen::VectorXcd y = Pinv * x.cast<cplx>();
    for (int i = 0; i < y.size(); ++i) y(i) *= std::exp(lam(i) * std::log(u));
    return (P * y).real();
  }
};

class Cheb {
 public:
  Cheb(double r0, int n) : r0_(r0), x_(n), w_(n) {
    for (int k = 0; k < n; ++k) {
      x_[k] = 0.5 * r0 * (1 - std::cos(M_PI * k / (n - 1)));
      w_[k] = (k % 2 ? -1.0 : 1.0) * ((k == 0 || k == n - 1) ? 0.5 : 1.0);
    }
  }
  const std::vector<double>& nodes() const { return x_; }
  double r0() const { return r0_; }

  RVec eval(const std::vector<RVec>& f, double r) const {
    double den = 0.0;
    RVec num = RVec::Zero(f[0].size());
    for (size_t k = 0; k < x_.size(); ++k) {
      const double d = r - x_[k];
      if (d == 0.0) return f[k];
      const double c = w_[k] / d;
      num += c * f[k];
      den += c;
    }
    return num / den;
  }

  RVec deriv(const std::vector<RVec>& f, double r) const {
    const int n = static_cast<int>(x_.size());
    for (int j = 0; j < n; ++j)
      if (r == x_[j]) {
        RVec s = RVec::Zero(f[0].size());
        double diag = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == j) continue;
          const double d = (w_[k] / w_[j]) / (x_[j] - x_[k]);
          s += d * f[k];
          diag -= d;
        }
        return s + diag * f[j];
      }
    const RVec p = eval(f, r);
    double den = 0.0;
    RVec num = RVec::Zero(f[0].size());
    for (int k = 0; k < n; ++k) {
      const double c = w_[k] / (r - x_[k]);
      num += c * (f[k] - p) / (r - x_[k]);
      den += c;
    }
    return num / den;
  }

 private:
  double r0_;
  std::vector<double> x_, w_;
};

RMat H_at(const SingularODEProblem& pb, const RVec& theta) {
  if (pb.kind == SingularODEProblem::Kind::Scalar) {
    RMat H = RMat::Zero(pb.m, pb.m);
    for (int i = 0; i < pb.m; ++i) H(i, i) = pb.lambdas[i];
    return H;
  }
  return pb.H(theta);
}

RVec theta0(const SingularODEProblem& pb) {
  RVec t = RVec::Zero(pb.m + pb.n);
  if (pb.n > 0) t.tail(pb.n) = pb.beta0;
  return t;
}

void check_problem(const SingularODEProblem& pb) {
  if (pb.m <= 0 || pb.n < 0 || !pb.h1 || (pb.n > 0 && !pb.h2) || !(pb.r0 > 0))
    throw Error(ErrorKind::InvalidArgument, "malformed singular ODE problem");
  if (pb.n > 0 && pb.beta0.size() != pb.n) throw Error(ErrorKind::InvalidArgument, "beta0 size mismatch");
  if (pb.kind == SingularODEProblem::Kind::Scalar) {
    if (static_cast<int>(pb.lambdas.size()) != pb.m) throw Error(ErrorKind::InvalidArgument, "lambda size");
    for (double l : pb.lambdas)
      if (!(l > -1.0)) throw Error(ErrorKind::EigenvalueViolation, "lambda_i <= -1");
    return;
  }
  if (!pb.H) throw Error(ErrorKind::InvalidArgument, "matrix problem needs H");
  Eigen::EigenSolver<RMat> es(pb.H(theta0(pb)));
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (!(es.eigenvalues()(i).real() > 0))
      throw Error(ErrorKind::EigenvalueViolation, "Re spec H(0, beta0) must be positive");
}

struct Operator {
  const SingularODEProblem& pb;
  Cheb cheb;
  RMat H0;
  Eig eig;
  RVec th0;

  Operator(const SingularODEProblem& p, double r0, int n)
      : pb(p), cheb(r0, n), H0(H_at(p, theta0(p))), eig(H0), th0(theta0(p)) {}

  std::vector<RVec> apply(const std::vector<RVec>& f) const {
    const auto& R = rule();
    std::vector<RVec> out;
    const int m = pb.m;
    for (double r : cheb.nodes()) {
      if (r == 0.0) {
        out.push_back(th0);
        continue;
      }
      RVec a = RVec::Zero(m);
      RVec b = RVec::Zero(pb.n);
      for (size_t q = 0; q < R.x.size(); ++q) {
        const double v = R.x[q];
        const double u = std::pow(v, kQ);
        const double jac = kQ * std::pow(v, kQ - 1);
        const double t = r * u;
        const RVec th = cheb.eval(f, t);
        const RVec al = th.head(m);
        RVec g = (H0 - H_at(pb, th)) * al / t + pb.h1(t, th);
        a += R.w[q] * jac * eig.apply(u, g);
        if (pb.n > 0) b += R.w[q] * pb.h2(r * v, cheb.eval(f, r * v));
      }
      RVec th(m + pb.n);
      th.head(m) = r * a;
      if (pb.n > 0) th.tail(pb.n) = pb.beta0 + r * b;
      out.push_back(th);
    }
    return out;
  }
};

double sup_diff(const std::vector<RVec>& a, const std::vector<RVec>& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) s = std::max(s, (a[k] - b[k]).norm());
  return s;
}

// Member of B: theta0 + r M (a + b cos(pi r / r0)) / 2 with |a|, |b| <= 1.
std::vector<RVec> ball_member(const Operator& op, double M, std::mt19937_64& rng) {
  const int d = static_cast<int>(op.th0.size());
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  auto unit = [&] {
    RVec v(d);
    for (int i = 0; i < d; ++i) v(i) = nd(rng);
    return RVec(v.normalized() * std::pow(ud(rng), 1.0 / d));
  };
  RVec a = unit(), b = unit();
  std::vector<RVec> f;
  for (double r : op.cheb.nodes())
    f.push_back(op.th0 + r * M * 0.5 * (a + b * std::cos(M_PI * r / op.cheb.r0())));
  return f;
}

double lipschitz_in_r(const Operator& op, const std::vector<RVec>& f) {
  double s = 0.0;
  for (size_t k = 0; k < f.size(); ++k) {
    const double r = op.cheb.nodes()[k];
    if (r > 0) s = std::max(s, (f[k] - op.th0).norm() / r);
  }
  return s;
}

}  // namespace

SingularODEProblem scalar_problem(std::vector<double> lambdas,
                                  std::function<RVec(double, const RVec&)> h, double r0) {
  SingularODEProblem p;
  p.kind = SingularODEProblem::Kind::Scalar;
  p.m = static_cast<int>(lambdas.size());
  p.n = 0;
  p.lambdas = std::move(lambdas);
  p.h1 = std::move(h);
  p.r0 = r0;
  return p;
}

RMat matrix_power_r(const RMat& H, double r) {
  if (!(r > 0)) throw Error(ErrorKind::InvalidArgument, "r^H needs r > 0");
  Eig e(H);
  Eigen::VectorXcd d(e.lam.size());
  for (int i = 0; i < d.size(); ++i) d(i) = std::exp(e.lam(i) * std::log(r));
  return (e.P * d.asDiagonal() * e.Pinv).real();
}

RVec PicardSolution::operator()(double r) const {
  Cheb c(r0, static_cast<int>(nodes.size()));
  return c.eval(values, r);
}

RVec PicardSolution::derivative(double r) const {
  Cheb c(r0, static_cast<int>(nodes.size()));
  return c.deriv(values, r);
}

std::vector<RVec> picard_operator(const SingularODEProblem& problem, double r0,
                                  const std::vector<RVec>& values, int nodes) {
  check_problem(problem);
  Operator op(problem, r0, nodes);
  return op.apply(values);
}

PicardSolution picard_solve(const SingularODEProblem& pb, const PicardOptions& opts) {
  check_problem(pb);
  const RVec th0 = theta0(pb);
  const RMat H0 = H_at(pb, th0);
  RVec pred(pb.m + pb.n);
  pred.head(pb.m) = (RMat::Identity(pb.m, pb.m) + H0).partialPivLu().solve(pb.h1(0.0, th0));
  if (pb.n > 0) pred.tail(pb.n) = pb.h2(0.0, th0);

  std::mt19937_64 rng(opts.seed);
  double r0 = pb.r0;
  for (int shrink = 0; shrink <= opts.max_shrinks; ++shrink, r0 *= 0.5) {
    Operator op(pb, r0, opts.nodes);
    // M: double until T maps sampled members of B back into B.
    double M = std::max(1.0, 2.0 * pred.norm());
    bool mapped = false;
    for (int k = 0; k < 40 && !mapped; ++k) {
      mapped = true;
      for (int s = 0; s < opts.contraction_pairs && mapped; ++s)
        if (lipschitz_in_r(op, op.apply(ball_member(op, M, rng))) > M) mapped = false;
      if (!mapped) M *= 2.0;
    }
    if (!mapped) continue;
    double factor = 0.0;
    for (int s = 0; s < opts.contraction_pairs; ++s) {
      auto f = ball_member(op, M, rng), g = ball_member(op, M, rng);
      const double den = sup_diff(f, g);
      if (den > 0) factor = std::max(factor, sup_diff(op.apply(f), op.apply(g)) / den);
    }
    if (factor > opts.contraction_target) continue;

    std::vector<RVec> f;
    for (double r : op.cheb.nodes()) f.push_back(th0 + r * pred);
    double upd = 0.0;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
      auto g = op.apply(f);
      upd = sup_diff(f, g);
      f = std::move(g);
      if (upd < opts.tol) break;
    }
    if (!(upd < opts.tol))
      throw Error(ErrorKind::ContractionFailure, "Picard iteration did not converge");

    PicardSolution sol;
    sol.r0 = r0;
    sol.M = M;
    sol.contraction = factor;
    sol.iterations = it + 1;
    sol.shrinks = shrink;
    sol.final_update = upd;
    sol.nodes = op.cheb.nodes();
    sol.values = std::move(f);
    sol.predicted_slope = pred;
    sol.slope0 = sol.derivative(0.0);
    return sol;
  }
  throw Error(ErrorKind::ContractionFailure, "contraction factor above target at the smallest r0");
}

ExtraSolutionReport no_extra_solutions_probe(const SingularODEProblem& pb, const PicardSolution& sol,
                                             double offset, double r_floor_ratio) {
  if (pb.kind != SingularODEProblem::Kind::Matrix)
    throw Error(ErrorKind::InvalidArgument, "probe needs a matrix-kind problem");
  check_problem(pb);
  const int m = pb.m, d = pb.m + pb.n;
  const RVec th0 = theta0(pb);
  const RMat H0 = H_at(pb, th0);
  Eig eig(H0);
  int lo = 0;
  for (int i = 1; i < eig.lam.size(); ++i)
    if (eig.lam(i).real() < eig.lam(lo).real()) lo = i;
  RVec v = eig.P.col(lo).real();
  if (v.norm() < 1e-8) v = eig.P.col(lo).imag();
  v.normalize();
  // Left eigenvector picks the slow mode out of the deviation.
  const Eigen::RowVectorXcd wl = eig.Pinv.row(lo);
  double hi = eig.lam(0).real();
  for (int i = 1; i < eig.lam.size(); ++i) hi = std::max(hi, eig.lam(i).real());

  ExtraSolutionReport rep;
  rep.offset = offset;
  rep.expected_exponent = -eig.lam(lo).real();
  rep.fastest_exponent = -hi;
  rep.r_floor = sol.r0 * r_floor_ratio;

  // C2 = sup |h1| near the solution times max_{u in (0,1]} |u^H0|.
  double hsup = 0.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (int k = 0; k <= 200; ++k) {
    const double r = sol.r0 * k / 200.0;
    const RVec base = sol(r);
    for (int s = 0; s < 8; ++s) {
      RVec th = base;
      if (s > 0)
        for (int i = 0; i < d; ++i) th(i) += ud(rng);
      hsup = std::max(hsup, pb.h1(r, th).norm());
    }
  }
  double K = 0.0;
  for (int k = 1; k <= 400; ++k) {
    const double u = std::pow(10.0, -8.0 * (k - 1) / 399.0);
    Eigen::JacobiSVD<RMat> svd(matrix_power_r(H0, u));
    K = std::max(K, svd.singularValues()(0));
  }
  rep.C2 = hsup * K;
  rep.epsilon = 1.0 / (2.0 * rep.C2);

  // Backward in u = log r: d alpha/du = -H alpha + r h1, d beta/du = r h2.
  using State = std::vector<double>;
  auto sys = [&](const State& x, State& dx, double u) {
    const double r = std::exp(u);
    RVec th = Eigen::Map<const RVec>(x.data(), d);
    RVec out(d);
    out.head(m) = -H_at(pb, th) * th.head(m) + r * pb.h1(r, th);
    if (pb.n > 0) out.tail(pb.n) = r * pb.h2(r, th);
    dx.assign(out.data(), out.data() + d);
  };
  RVec start = sol(sol.r0);
  start.head(m) += offset * v;
  State x(start.data(), start.data() + d);
  namespace odeint = boost::numeric::odeint;
  auto stepper = odeint::make_controlled(1e-12, 1e-12, odeint::runge_kutta_dopri5<State>());
  double u = std::log(sol.r0), du = -1e-3;
  const double u_end = std::log(rep.r_floor);
  std::vector<std::pair<double, double>> fit, fit_total;  // (log r, log deviation)
  const double proj0 = std::abs((wl * v.cast<cplx>()).value()) * std::abs(offset);
  while (u > u_end) {
    if (u + du < u_end) du = u_end - u;
    double uu = u, h = du;
    if (stepper.try_step(sys, x, uu, h) == odeint::fail) {
      du = h;
      continue;
    }
    u = uu;
    du = h;
    const double r = std::exp(u);
    RVec th = Eigen::Map<const RVec>(x.data(), d);
    const double dev = (th - sol(r)).norm();
    rep.max_deviation = std::max(rep.max_deviation, dev);
    const RVec da = th.head(m) - sol(r).head(m);
    const double adev = da.norm();
    const double pdev = std::abs((wl * da.cast<cplx>()).value());
    if (offset != 0.0 && pdev > 2.0 * proj0 && adev < 0.5 * rep.epsilon) fit.push_back({u, std::log(pdev)});
    if (offset != 0.0 && adev > 2.0 * std::abs(offset) && adev < 0.5 * rep.epsilon)
      fit_total.push_back({u, std::log(adev)});
    if (th.head(m).norm() >= rep.epsilon) {
      rep.crossing_r = r;
      rep.diverged = true;
      break;
    }
  }
  auto slope = [](const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 3) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [a, b] : pts) {
      sx += a;
      sy += b;
      sxx += a * a;
      sxy += a * b;
    }
    const double n = static_cast<double>(pts.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };
  rep.divergence_exponent = slope(fit);
  rep.total_exponent = slope(fit_total);
  return rep;
}

double sup_distance(const PicardSolution& a, const PicardSolution& b, int samples) {
  const double R = std::min(a.r0, b.r0);
  double s = 0.0;
  for (int k = 0; k <= samples; ++k) {
    const double r = R * k / samples;
    s = std::max(s, (a(r) - b(r)).norm());
  }
  return s;
}

}  // namespace syzflow
