#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "syzflow/core_geometry.hpp"
#include "syzflow/errors.hpp"

namespace syzflow {

using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

// Real coordinates (Re z, Im z).
RVec to_real(const CVec& z);
CVec to_complex(const RVec& x);

// Ambient field X with X(c x) = c^d X(x), c > 0.  On the unit sphere
// X(theta) = v0(theta) + p0(theta) theta.
struct HomogeneousField {
  int dim = 0;
  int degree = 0;
  std::function<RVec(const RVec&)> field;
  // Restriction of the potential for gradient fields; empty otherwise.
  std::function<double(const RVec&)> fhat;

  RVec operator()(const RVec& x) const { return field(x); }
  RVec v0(const RVec& theta) const;
  double p0(const RVec& theta) const;
  // v0/p0; infinite entries where p0 = 0.
  RVec ratio(const RVec& theta) const;
  bool gradient() const { return static_cast<bool>(fhat); }
};

// Flat gradient of Re(z_1 ... z_n) on C^n.
HomogeneousField model_ii_field(int n);
// v0 -> -v0, p0 unchanged.
HomogeneousField reversed_tangential(const HomogeneousField& f);

struct SphereGrid {
  int points = 2000;
  unsigned long long seed = 1;
  double candidate = 1.0;   // refine starts with |v0/p0| below this
  double threshold = 1e-4;  // membership after refinement
  double refine_tol = 1e-6;
  int refine_iters = 40;
  double sign_radius = 1e-3;
};

struct ZSets {
  std::vector<RVec> plus, minus, zero;
  int candidates = 0;
  int refined = 0;
};

ZSets z_sets(const HomogeneousField& f, const SphereGrid& grid = {});

// Columns orthonormal, tangent to the sphere at cloud[index], normal to the
// cloud.  tangent_dim < 0: estimated from the local PCA spectrum.
RMat normal_frame(const std::vector<RVec>& cloud, std::size_t index, int neighbours = 16,
                  int tangent_dim = -1);

struct BilinearForm {
  RMat matrix;
  Eigen::VectorXcd eigenvalues;
  double max_real = 0.0;
  double asymmetry = 0.0;  // |B - B^T| / |B|
  bool hyperbolic = false;
};

// <n_i, n_j> = n_i (v0/p0, n_j), central differences with one Richardson step.
BilinearForm normal_bilinear_form(const HomogeneousField& f, const RVec& theta, const RMat& frame,
                                  double step = 1e-4, double margin = 1e-6,
                                  double det_threshold = 1e-10);

struct MarginReport {
  double radius = 0.0;
  double margin = 0.0;  // min of -(e+, v0) over the Z+ tube and (e-, v0) over the Z- tube
  double min_plus = 0.0, min_minus = 0.0;
  int samples = 0;
  bool pass = false;
};

struct TubeSamples {
  std::vector<RVec> base;
  std::vector<RMat> frames;
};

TubeSamples tube_frames(const std::vector<RVec>& cloud, int max_points = 64, int neighbours = 16);

MarginReport geometric_hyperbolicity_margin(const HomogeneousField& f, const TubeSamples& plus,
                                            const TubeSamples& minus, double radius,
                                            int directions = 8, unsigned long long seed = 3);

struct MarginScaling {
  std::vector<double> radii, margins;
  double slope = 0.0;  // log-log fit
};

MarginScaling margin_scaling(const HomogeneousField& f, const TubeSamples& plus,
                             const TubeSamples& minus, const std::vector<double>& radii);

// Hessian of fhat(normalize(theta + sum a_i n_i)) at a = 0.
RMat sphere_hessian(const HomogeneousField& f, const RVec& theta, const RMat& frame,
                    double step = 1e-4);

struct HessianVerdict {
  Eigen::VectorXd eigenvalues;
  bool negative_definite = false;
  bool positive_definite = false;
};

HessianVerdict sphere_hessian_test(const HomogeneousField& f, const RVec& theta, const RMat& frame,
                                   double step = 1e-4, double degenerate_tol = 1e-6);

// Min real part of the spectrum of A + B, A random SPD, B random antisymmetric.
double spd_plus_antisymmetric_min_real(int dim, unsigned long long seed);

// Distance to {|z_i|^2 = 1/n, prod z_i real with the given sign}, through the
// equal phase shift projection (an upper bound on the true distance).
double model_ii_torus_distance(const RVec& theta, int sign);

struct HyperbolicityOptions {
  SphereGrid grid;
  double tube_radius = 0.05;
  int tube_points = 48;
  int forms = 24;
};

struct HyperbolicitySuite {
  int n = 0;
  std::size_t plus = 0, minus = 0, zero = 0;
  double hausdorff = 0.0;         // one-sided, samples to analytic tori
  double form_max_real = 0.0;     // worst over Z+ and Z- samples
  double form_max_asymmetry = 0.0;
  double hessian_max_plus = 0.0;  // largest transverse eigenvalue at Z+
  double hessian_min_minus = 0.0;
  MarginReport margin;
  MarginScaling scaling;
  bool reversed_fails = false;
};

HyperbolicitySuite hyperbolicity_suite(int n, const HyperbolicityOptions& opts = {});
nlohmann::json suite_to_json(const HyperbolicitySuite& s);

}  // namespace syzflow
