#include "syzflow/flow_engine.hpp"

#include <cmath>
#include <exception>

#include <boost/numeric/odeint.hpp>

#include "syzflow/parallel.hpp"

namespace syzflow {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

void pack(const CVec& z, State& x) {
  x.resize(2 * z.size());
  for (int i = 0; i < z.size(); ++i) {
    x[2 * i] = z(i).real();
    x[2 * i + 1] = z(i).imag();
  }
}

CVec unpack(const State& x) {
  CVec z(static_cast<Eigen::Index>(x.size() / 2));
  for (int i = 0; i < z.size(); ++i) z(i) = cplx(x[2 * i], x[2 * i + 1]);
  return z;
}

cplx s_at(const MeromorphicPencil& pencil, const AffinePoint& pt) {
  SValue sv = eval_s(pencil, pt);
  if (sv.pole) throw Error(ErrorKind::PolePoint, "trajectory reached a pole");
  return sv.value;
}

// Newton on s(z) = target along V; ds(V) = 1 makes this the exact Newton step.
AffinePoint project(const MeromorphicPencil& pencil, const MetricField& metric, AffinePoint pt,
                    cplx target, const FlowOptions& opts) {
  const double scale = std::max(1.0, std::abs(target));
  for (int it = 0; it < opts.projection_iters; ++it) {
    cplx err = target - s_at(pencil, pt);
    if (std::abs(err) <= opts.projection_tol * scale) break;
    TangentVector V = normalized_field(pencil, pt, metric);
    pt.coords += err * V.v;
  }
  return pt;
}

// Switch projective charts once the current one gets badly scaled.
AffinePoint rechart(const AffinePoint& pt) {
  if (pt.chart < 0) return pt;
  if (pt.coords.size() == 0 || pt.coords.cwiseAbs().maxCoeff() <= 2.0) return pt;
  return in_best_chart(pt);
}

class Runner {
 public:
  Runner(const MeromorphicPencil& pencil, const MetricField& metric, const FlowOptions& opts)
      : pencil_(pencil), metric_(metric), opts_(opts) {}

  Trajectory run(const AffinePoint& start, double T) {
    if (!(opts_.abs_tol > 0 && opts_.rel_tol > 0 && opts_.projection_tol > 0 && opts_.max_steps > 0))
      throw Error(ErrorKind::InvalidArgument, "flow tolerances must be positive");
    pt_ = start;
    cplx s0 = s_at(pencil_, pt_);
    if (!std::isfinite(s0.imag())) throw Error(ErrorKind::InvalidArgument, "Im s not finite at start");
    traj_.s_start = s0;
    im0_ = s0.imag();
    t_ = s0.real();
    check_standoff();
    record();
    if (t_ == T) return finish(T);
    dir_ = T > t_ ? 1.0 : -1.0;

    auto stepper = odeint::make_controlled(opts_.abs_tol, opts_.rel_tol,
                                           odeint::runge_kutta_dopri5<State>());
    odeint::runge_kutta_dopri5<State> fixed;
    double dt = dir_ * (opts_.fixed_dt > 0 ? opts_.fixed_dt : opts_.initial_dt);
    long steps = 0;

    while (dir_ * (T - t_) > 1e-14 * std::max(1.0, std::abs(T))) {
      if (++steps > opts_.max_steps) throw Error(ErrorKind::MaxStepsExceeded, "flow step budget exhausted");
      if (gradient_norm2(pencil_, pt_, metric_) < opts_.critical_threshold) {
        arc_mode(T);
        stepper.reset();
        fixed.reset();
        continue;
      }
      if (dir_ * (t_ + dt - T) > 0) dt = T - t_;
      State x;
      pack(pt_.coords, x);
      double t_try = t_;
      const int chart = pt_.chart;
      auto sys = [&](const State& y, State& dydt, double) {
        TangentVector V = normalized_field(pencil_, AffinePoint{chart, unpack(y)}, metric_);
        pack(V.v, dydt);
      };
      try {
        if (opts_.fixed_dt > 0) {
          fixed.do_step(sys, x, t_try, dt);
          t_try += dt;
        } else {
          double h = dt;
          if (stepper.try_step(sys, x, t_try, h) == odeint::fail) {
            ++traj_.rejected;
            dt = h;
            if (std::abs(dt) < opts_.min_dt) throw Error(ErrorKind::StepUnderflow, "step size underflow");
            continue;
          }
          dt = h;
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::CriticalPoint && e.kind() != ErrorKind::PolePoint) throw;
        ++traj_.rejected;
        stepper.reset();
        fixed.reset();
        dt *= 0.5;
        if (std::abs(dt) < opts_.min_dt)
          throw Error(ErrorKind::StepUnderflow, std::string("step size underflow near E_V: ") + e.what());
        continue;
      }
      accept(AffinePoint{chart, unpack(x)}, t_try);
      stepper.reset();
      fixed.reset();
    }
    return finish(T);
  }

 private:
  void accept(AffinePoint raw, double t_new) {
    const cplx s_prev(t_, im0_);
    const cplx s_raw = s_at(pencil_, raw);
    const double h = t_new - t_;
    traj_.max_secant_residual = std::max(traj_.max_secant_residual, std::abs((s_raw - s_prev) / h - 1.0));
    traj_.max_raw_im_drift = std::max(traj_.max_raw_im_drift, std::abs(s_raw.imag() - im0_));
    traj_.max_raw_level_error = std::max(traj_.max_raw_level_error, std::abs(s_raw.real() - t_new));
    pt_ = opts_.project ? project(pencil_, metric_, raw, cplx(t_new, im0_), opts_) : raw;
    pt_ = rechart(pt_);
    t_ = t_new;
    ++traj_.accepted;
    check_standoff();
    record();
  }

  // Follows W / |W| until |grad f| recovers; t is read off as Re s.
  void arc_mode(double T) {
    traj_.reparametrized = true;
    auto dir_field = [&](const CVec& z) {
      TangentVector W = smooth_representative(pencil_, AffinePoint{pt_.chart, z}, metric_);
      const double n = W.v.norm();
      if (!(n > kCriticalFloor)) throw Error(ErrorKind::CriticalPointHit, "smooth representative vanishes");
      return CVec(dir_ * W.v / n);
    };
    long guard = 0;
    while (dir_ * (T - t_) > 0) {
      if (++guard > opts_.max_steps) throw Error(ErrorKind::MaxStepsExceeded, "arc-length budget exhausted");
      const double h = opts_.arc_step;
      const CVec& z = pt_.coords;
      CVec k1 = dir_field(z);
      CVec k2 = dir_field(z + 0.5 * h * k1);
      CVec k3 = dir_field(z + 0.5 * h * k2);
      CVec k4 = dir_field(z + h * k3);
      AffinePoint next{pt_.chart, z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)};
      const double t_new = s_at(pencil_, next).real();
      if (!(dir_ * (t_new - t_) > 0))
        throw Error(ErrorKind::CriticalPointHit, "no progress in Re s along the smooth representative");
      ++traj_.arc_steps;
      if (dir_ * (t_new - T) >= 0) {
        pt_ = project(pencil_, metric_, next, cplx(T, im0_), opts_);
        t_ = T;
        check_standoff();
        record();
        return;
      }
      // Only Im s is restored here; Re s is whatever the arc produced.
      pt_ = rechart(project(pencil_, metric_, next, cplx(t_new, im0_), opts_));
      t_ = t_new;
      check_standoff();
      record();
      if (gradient_norm2(pencil_, pt_, metric_) >= 4.0 * opts_.critical_threshold) return;
    }
  }

  Trajectory finish(double T) {
    if (traj_.accepted + traj_.arc_steps > 0) {
      pt_ = project(pencil_, metric_, pt_, cplx(T, im0_), opts_);
      t_ = T;
    }
    const cplx s = s_at(pencil_, pt_);
    traj_.level_residual = std::abs(s - cplx(T, im0_));
    traj_.max_im_drift = std::max(traj_.max_im_drift, std::abs(s.imag() - im0_));
    traj_.end = pt_;
    if (opts_.keep_samples && !traj_.samples.empty()) traj_.samples.back() = FlowSample{T, pt_};
    return std::move(traj_);
  }

  void record() {
    const cplx s = s_at(pencil_, pt_);
    traj_.max_im_drift = std::max(traj_.max_im_drift, std::abs(s.imag() - im0_));
    if (gradient_norm2(pencil_, pt_, metric_) >= opts_.critical_threshold) {
      TangentVector V = normalized_field(pencil_, pt_, metric_);
      traj_.max_ds_residual =
          std::max(traj_.max_ds_residual, std::abs(ds_apply(pencil_, pt_, V.v) - 1.0));
    }
    if (opts_.keep_samples) traj_.samples.push_back(FlowSample{t_, pt_});
  }

  void check_standoff() {
    const double d = inv_distance_estimate(pencil_, pt_);
    traj_.min_inv_distance = std::min(traj_.min_inv_distance, d);
    if (d < opts_.standoff)
      throw Error(ErrorKind::CriticalPointHit,
                  "trajectory entered the standoff radius of X_inv (distance estimate " +
                      std::to_string(d) + ", t = " + std::to_string(t_) + ")");
  }

  const MeromorphicPencil& pencil_;
  const MetricField& metric_;
  const FlowOptions& opts_;
  AffinePoint pt_;
  Trajectory traj_;
  double t_ = 0.0, im0_ = 0.0, dir_ = 1.0;
};

}  // namespace

Trajectory integrate(const MeromorphicPencil& pencil, const MetricField& metric,
                     const AffinePoint& start, double t_target, const FlowOptions& opts) {
  if (!std::isfinite(t_target)) throw Error(ErrorKind::InvalidArgument, "t_target not finite");
  Runner r(pencil, metric, opts);
  return r.run(start, t_target);
}

double inv_distance_estimate(const MeromorphicPencil& pencil, const AffinePoint& pt) {
  if (pencil.q.degree() <= 0 || pencil.p.is_zero()) return std::numeric_limits<double>::infinity();
  CVec z = pencil_args(pencil, pt);
  auto est = [&](const Polynomial& f) {
    const double v = std::abs(f.eval(z));
    if (v == 0.0) return 0.0;
    const double g = f.grad(z).norm();
    return g > 0 ? v / g : std::numeric_limits<double>::infinity();
  };
  return std::max(est(pencil.p), est(pencil.q));
}

LevelSetResult flow_level_set(const MeromorphicPencil& pencil, const MetricField& metric,
                              const std::vector<AffinePoint>& seeds, double c,
                              const FlowOptions& opts, double seed_tol) {
  for (const auto& s : seeds) {
    SValue sv = eval_s(pencil, s);
    if (sv.pole || std::abs(sv.value) > seed_tol)
      throw Error(ErrorKind::InvalidArgument, "seed is not on {s = 0}");
  }
  LevelSetResult out;
  out.trajectories.resize(seeds.size());
  std::vector<std::exception_ptr> errs(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    try {
      out.trajectories[i] = integrate(pencil, metric, seeds[i], c, opts);
    } catch (...) {
      errs[i] = std::current_exception();
    }
  });
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  for (const auto& t : out.trajectories) out.endpoints.push_back(t.end);
  return out;
}

std::vector<AffinePoint> orbit_seeds(const AffinePoint& base, const std::vector<int>& weights,
                                     int count) {
  if (static_cast<int>(weights.size()) != base.coords.size())
    throw Error(ErrorKind::InvalidArgument, "orbit weights length mismatch");
  std::vector<AffinePoint> out;
  for (int j = 0; j < count; ++j) {
    const double th = 2.0 * M_PI * j / count;
    AffinePoint p = base;
    for (int k = 0; k < p.coords.size(); ++k) p.coords(k) *= std::polar(1.0, weights[k] * th);
    out.push_back(p);
  }
  return out;
}

std::vector<double> moment_image(const MeromorphicPencil& pencil, const AffinePoint& pt) {
  CVec z = pencil_args(pencil, pt);
  std::vector<double> m(z.size());
  double sum = 0.0;
  for (int i = 0; i < z.size(); ++i) sum += (m[i] = std::abs(z(i)));
  if (pencil.projective)
    for (auto& v : m) v /= sum;
  return m;
}

StandoffReport standoff_diagnostic(const Trajectory& traj, const std::vector<double>& weights,
                                   double collapse_ratio) {
  StandoffReport r;
  if (traj.samples.empty()) return r;
  auto rho = [&](const AffinePoint& p) {
    double v = 0.0;
    for (int i = 0; i < p.coords.size() && i < static_cast<int>(weights.size()); ++i)
      v += weights[i] * std::norm(p.coords(i));
    return v;
  };
  r.rho_start = rho(traj.samples.front().point);
  r.min_rho = r.rho_start;
  for (const auto& s : traj.samples) r.min_rho = std::min(r.min_rho, rho(s.point));
  r.min_log_rho = std::log(r.min_rho);
  r.collapsed = !(r.min_rho > collapse_ratio * r.rho_start);
  return r;
}

std::vector<double> balanced_weights(int nvars, const std::vector<int>& num,
                                     const std::vector<int>& den) {
  if (num.empty() || den.empty()) throw Error(ErrorKind::InvalidArgument, "both groups must be nonempty");
  std::vector<double> w(nvars, 0.0);
  for (int i : num) w.at(i) = 1.0 / num.size();
  for (int i : den) w.at(i) = 1.0 / den.size();
  return w;
}

bool standoff_stable(const std::vector<StandoffReport>& refinements, double tol) {
  for (const auto& r : refinements)
    if (r.collapsed || std::abs(r.min_log_rho - refinements.front().min_log_rho) > tol) return false;
  return true;
}

nlohmann::json trajectory_to_json(const Trajectory& traj) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : traj.samples) samples.push_back({{"t", s.t}, {"point", point_to_json(s.point)}});
  return {{"samples", samples},
          {"end", point_to_json(traj.end)},
          {"diagnostics",
           {{"max_im_drift", traj.max_im_drift},
            {"max_raw_im_drift", traj.max_raw_im_drift},
            {"level_residual", traj.level_residual},
            {"max_ds_residual", traj.max_ds_residual},
            {"max_secant_residual", traj.max_secant_residual},
            {"min_inv_distance", traj.min_inv_distance},
            {"accepted", traj.accepted},
            {"rejected", traj.rejected},
            {"arc_steps", traj.arc_steps},
            {"reparametrized", traj.reparametrized}}}};
}

}  // namespace syzflow
