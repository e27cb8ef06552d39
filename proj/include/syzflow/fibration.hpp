#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "syzflow/core_geometry.hpp"
#include "syzflow/errors.hpp"

namespace syzflow {

// Point of the simplex boundary: nonnegative weights summing to 1.
struct SimplexPoint {
  std::vector<double> w;
};

// Validates and returns; throws InvalidArgument otherwise.
SimplexPoint make_simplex_point(std::vector<double> w, double tol = 1e-14);

// l1-normalized moduli of the homogeneous coordinates.
SimplexPoint moment_map(const AffinePoint& pt);

enum class LocusFamily { Tilde, Graph };

enum class Stratum { Generic, Tilde0, Tilde1, Tilde2, Graph1, Graph2, Graph3 };
const char* to_string(Stratum s);

struct LocusStratum {
  Stratum tag = Stratum::Generic;
  std::array<int, 3> triangle{-1, -1, -1};
};

inline constexpr double kStratumTol = 1e-9;

// Chart (r1, r2) = (|x1|, |x2|) of one coordinate CP^2.
LocusStratum gamma_tilde_membership(double r1, double r2, double tol = kStratumTol);
LocusStratum gamma_membership(double r1, double r2, double tol = kStratumTol);
// Euclidean distance in the chart to the three legs of the graph.
double gamma_distance(double r1, double r2);

// Support of size <= 3 is placed in a triangle {i, j, k} and read in the chart
// of its largest weight; larger supports are generic.
LocusStratum classify(const SimplexPoint& p, LocusFamily family, double tol = kStratumTol);

// Solutions (theta1, theta2) in [0, 2 pi)^2 of r1^5 e^{5i theta1} + r2^5 e^{5i theta2} + 1 = 0.
std::vector<std::pair<double, double>> sigma_fiber_phases(double r1, double r2, double tol = kStratumTol);
int sigma_fiber_count(double r1, double r2, double tol = kStratumTol);

enum class FiberType { T3, Collapse50, Collapse25, Collapse5Tori, I5, II5x5, III5 };
const char* to_string(FiberType t);

struct GraphCensus {
  int vertices = 0;
  int edges = 0;
  int faces = 0;  // components of the complement in the fiber torus (or circle)
  int euler() const { return vertices - edges; }
};

struct FiberModel {
  FiberType type = FiberType::T3;
  int singular_points = 0;
  GraphCensus census;
  // Compactly supported Euler number; the torus-bundle pieces contribute 0.
  int euler = 0;
};

FiberModel fiber_type(double r1, double r2, LocusFamily family, double tol = kStratumTol);

// Arc families on the fiber torus over the trivalent vertex, selected by bit
// mask (1: theta1 + theta2, 2: 2 theta1 - theta2, 4: 2 theta2 - theta1).
struct ArcGraph {
  struct Arc {
    int family;
    std::array<double, 2> start, delta;  // start + s delta (mod 2 pi), s in [0, 1]
  };
  std::vector<Arc> arcs;
  std::vector<std::array<double, 2>> vertices;
  int interior_crossings = 0;
  GraphCensus census;
};

ArcGraph type_II_graph(int families = 7, int raster = 500);

// Phase loops of Sigma over a chart path; counts the circles in the fiber torus.
int phase_loop_components(const std::vector<std::pair<double, double>>& path);
GraphCensus type_I_census(double rho);
GraphCensus type_III_census();

struct LocusCell {
  double r1, r2;
  Stratum tag;
};

std::vector<LocusCell> locus_grid(LocusFamily family, int grid, double rmax = 2.0, double tol = kStratumTol);

nlohmann::json fiber_to_json(const FiberModel& f);

}  // namespace syzflow
