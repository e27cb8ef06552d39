#pragma once

#include <limits>
#include <vector>

#include "syzflow/core_geometry.hpp"

namespace syzflow {

struct FlowOptions {
  double initial_dt = 1e-2;
  double abs_tol = 1e-11;
  double rel_tol = 1e-11;
  double min_dt = 1e-13;
  long max_steps = 200000;
  // Newton projection stops once |s - target| is below this.
  double projection_tol = 1e-13;
  int projection_iters = 8;
  // Distance estimate to X_inv below which the run aborts.
  double standoff = 1e-6;
  // Below this |grad f|^2 the run follows W with arc length.
  double critical_threshold = 1e-12;
  double arc_step = 1e-3;
  // > 0: fixed step size, no error control.
  double fixed_dt = 0.0;
  bool project = true;
  bool keep_samples = true;
};

struct FlowSample {
  double t;
  AffinePoint point;
};

struct Trajectory {
  std::vector<FlowSample> samples;
  AffinePoint end;
  cplx s_start;
  // After projection.
  double max_im_drift = 0.0;
  // Before projection, i.e. what the integrator alone produced.
  double max_raw_im_drift = 0.0;
  double max_raw_level_error = 0.0;
  double level_residual = 0.0;
  double max_ds_residual = 0.0;      // |ds(V) - 1| at accepted points
  double max_secant_residual = 0.0;  // |(s_raw - s_prev)/dt - 1| per step
  double min_inv_distance = std::numeric_limits<double>::infinity();
  long accepted = 0;
  long rejected = 0;
  long arc_steps = 0;
  bool reparametrized = false;
};

Trajectory integrate(const MeromorphicPencil& pencil, const MetricField& metric,
                     const AffinePoint& start, double t_target, const FlowOptions& opts = {});

// First-order distance estimate to {p = 0} cap {q = 0}; infinity when q is constant.
double inv_distance_estimate(const MeromorphicPencil& pencil, const AffinePoint& pt);

struct LevelSetResult {
  std::vector<AffinePoint> endpoints;
  std::vector<Trajectory> trajectories;
};

// Seeds must sit on {s = 0}.  Runs in parallel; the first failing seed (by
// index) rethrows.
LevelSetResult flow_level_set(const MeromorphicPencil& pencil, const MetricField& metric,
                              const std::vector<AffinePoint>& seeds, double c,
                              const FlowOptions& opts = {}, double seed_tol = 1e-12);

// base_k * exp(i w_k theta_j), theta_j = 2 pi j / count.
std::vector<AffinePoint> orbit_seeds(const AffinePoint& base, const std::vector<int>& weights,
                                     int count);

// Moment-map image (|z_1|, ..., |z_N|) / sum, homogeneous coordinates for
// projective pencils.
std::vector<double> moment_image(const MeromorphicPencil& pencil, const AffinePoint& pt);

struct StandoffReport {
  double rho_start = 0.0;
  double min_rho = 0.0;
  double min_log_rho = 0.0;
  bool collapsed = false;
};

// rho = sum w_i |z_i|^2; collapse when min rho <= collapse_ratio * rho_start.
StandoffReport standoff_diagnostic(const Trajectory& traj, const std::vector<double>& weights,
                                   double collapse_ratio = 1e-6);

// Weights 1/|num| on the numerator indices and 1/|den| on the denominator ones.
std::vector<double> balanced_weights(int nvars, const std::vector<int>& num,
                                     const std::vector<int>& den);

// Are the min log rho values across refinements within tol of each other?
bool standoff_stable(const std::vector<StandoffReport>& refinements, double tol);

nlohmann::json trajectory_to_json(const Trajectory& traj);

}  // namespace syzflow
