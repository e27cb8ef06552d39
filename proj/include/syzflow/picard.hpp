#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "syzflow/errors.hpp"

namespace syzflow {

using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

// theta = (alpha, beta), alpha in R^m, beta in R^n.
//   d alpha/dr = -H(theta) alpha / r + h1(r, theta)
//   d beta/dr  = h2(r, theta)
//   theta(0) = (0, beta0)
struct SingularODEProblem {
  enum class Kind { Scalar, Matrix };
  Kind kind = Kind::Matrix;
  int m = 0, n = 0;
  std::function<RMat(const RVec& theta)> H;
  std::function<RVec(double r, const RVec& theta)> h1;
  std::function<RVec(double r, const RVec& theta)> h2;
  double r0 = 0.5;
  RVec beta0;
  // Scalar kind only.
  std::vector<double> lambdas;
};

// d theta_i/dr = -lambda_i theta_i / r + h_i(r, theta), theta(0) = 0.
SingularODEProblem scalar_problem(std::vector<double> lambdas,
                                  std::function<RVec(double, const RVec&)> h, double r0);

// r^{H} for r > 0 through the eigendecomposition of H.
RMat matrix_power_r(const RMat& H, double r);

struct PicardOptions {
  int nodes = 28;
  int max_iterations = 400;
  double tol = 1e-13;
  int max_shrinks = 12;
  int contraction_pairs = 12;
  double contraction_target = 0.5;
  unsigned long long seed = 7;
};

class PicardSolution {
 public:
  double r0 = 0.0;
  double M = 0.0;
  double contraction = 0.0;
  int iterations = 0;
  int shrinks = 0;
  double final_update = 0.0;
  RVec slope0;            // d theta/dr at 0 from the solution
  RVec predicted_slope;   // ((I + H0)^{-1} h1(0, 0, beta0), h2(0, 0, beta0))
  std::vector<double> nodes;
  std::vector<RVec> values;

  RVec operator()(double r) const;
  RVec derivative(double r) const;
};

PicardSolution picard_solve(const SingularODEProblem& problem, const PicardOptions& opts = {});

// T applied to the function represented by the values on the solution's nodes.
std::vector<RVec> picard_operator(const SingularODEProblem& problem, double r0,
                                  const std::vector<RVec>& values, int nodes);

struct ExtraSolutionReport {
  double epsilon = 0.0;
  double C2 = 0.0;
  double offset = 0.0;
  double crossing_r = -1.0;        // first r with |alpha| >= epsilon, -1 if none
  double r_floor = 0.0;
  double max_deviation = 0.0;      // from the Picard solution on [r_floor, r0]
  // Slopes of log deviation vs log r: the slow-mode component, and |alpha - alpha*|.
  double divergence_exponent = 0.0;
  double total_exponent = 0.0;
  double expected_exponent = 0.0;  // -min Re spec(H0)
  double fastest_exponent = 0.0;   // -max Re spec(H0)
  bool diverged = false;
};

// Backward integration from (r0, alpha*(r0) + offset * v, beta*(r0)), v the
// eigenvector of H0 with smallest real part.
ExtraSolutionReport no_extra_solutions_probe(const SingularODEProblem& problem,
                                             const PicardSolution& sol, double offset,
                                             double r_floor_ratio = 1e-9);

// sup |theta_a - theta_b| on a fine grid over [0, min(r0)].
double sup_distance(const PicardSolution& a, const PicardSolution& b, int samples = 400);

}  // namespace syzflow
