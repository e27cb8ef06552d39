#pragma once

#include <utility>
#include <vector>

#include "syzflow/core_geometry.hpp"

namespace syzflow {

// s = prod_{i<m} z_i / prod_{m<=i<m+n} z_i on C^{m+n+l} (0-based groups).
struct ModelSpec {
  int m = 1, n = 0, l = 0;
  int nvars() const { return m + n + l; }
};

void validate(const ModelSpec& spec);
MeromorphicPencil model_pencil(const ModelSpec& spec);

struct InvariantPair {
  int i, j;
  bool cross;  // numerator/denominator pair: |z_i|^2 + |z_j|^2
  double value;
};

// All pairs i < j among the first m + n coordinates.
std::vector<InvariantPair> invariants_of_model(const ModelSpec& spec, const CVec& z);

// z on X_c for s = z2 z3 / z1, Im s = 0.
std::pair<double, double> phi_pair(const CVec& z, double c, double tol = 1e-10);

enum class LocalModel { I, II };

// Model I: z = (z0, z1..zn) with s = z1...zn / z0, minimum over 1..n.
// Model II: z = (z1..zn) with s = z1...zn, minimum over all.
// minimizer < 0 picks it automatically.
CVec extended_coordinates(LocalModel model, const CVec& z, int minimizer = -1);

// Coordinates on X_c (c != 0) used by the probe: z1 = r1 e^{i th1}, z2 = r2 e^{i th2}, z3 = c z1 / z2.
CVec xc_point(double c, double r1, double th1, double r2, double th2);

// Radius^2 of the real-section representative of the fibration: phi2^2 + max(phi1, 0).
double section_radius2(const CVec& z, double c);

struct LipschitzLevel {
  double h;
  double value_gap;       // |phi2(+h) - phi2(-h)|
  double derivative_gap;  // one-sided derivatives of the section map, across the seam
};

struct LipschitzReport {
  double c, r1, theta1, r2;
  std::vector<LipschitzLevel> levels;
  double value_gap_order = 0.0;  // log2 of successive value-gap ratios (last level)
  double min_derivative_gap = 0.0;
  double max_derivative_gap = 0.0;
  bool continuous = false;
  bool kink_persists = false;
  bool pass = false;
};

LipschitzReport lipschitz_probe(double c, double r1, double theta1, double theta2 = 0.3,
                                double h0 = 1e-2, int refinements = 4, double margin = 1e-2);

struct SecondDifferenceReport {
  std::vector<double> h;
  std::vector<double> max_second_difference;  // over sampled directions
  double growth_exponent = 0.0;  // slope of log sd vs log(1/h)
  bool bounded = false;
};

// Second differences of phi2 at z2 = z3 = 0 in (z2, z3) coordinates on X_c.
SecondDifferenceReport origin_second_differences(double c, int directions = 64, double h0 = 1e-1,
                                                 int levels = 5);

}  // namespace syzflow
