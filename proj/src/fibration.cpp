#include "syzflow/fibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "syzflow/parallel.hpp"

namespace syzflow {

namespace {

constexpr double kTwoPi = 2 * M_PI;

double wrap(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0 ? a + kTwoPi : a;
}

// Shortest signed difference on the circle.
double circ(double a) { return std::remainder(a, kTwoPi); }

}  // namespace

SimplexPoint make_simplex_point(std::vector<double> w, double tol) {
  if (w.empty()) throw Error(ErrorKind::InvalidArgument, "empty weight vector");
  double s = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw Error(ErrorKind::InvalidArgument, "negative or NaN weight");
    s += x;
  }
  if (std::abs(s - 1.0) > tol) throw Error(ErrorKind::InvalidArgument, "weights do not sum to 1");
  return {std::move(w)};
}

SimplexPoint moment_map(const AffinePoint& pt) {
  CVec z = pt.chart >= 0 ? homogeneous(pt) : pt.coords;
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) s += std::abs(z(i));
  if (!(s > 0)) throw Error(ErrorKind::InvalidArgument, "moment map of the zero vector");
  std::vector<double> w(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) w[i] = std::abs(z(i)) / s;
  return {w};
}

const char* to_string(Stratum s) {
  switch (s) {
    case Stratum::Generic: return "generic";
    case Stratum::Tilde0: return "tilde0";
    case Stratum::Tilde1: return "tilde1";
    case Stratum::Tilde2: return "tilde2";
    case Stratum::Graph1: return "graph1";
    case Stratum::Graph2: return "graph2";
    case Stratum::Graph3: return "graph3";
  }
  return "?";
}

const char* to_string(FiberType t) {
  switch (t) {
    case FiberType::T3: return "T3";
    case FiberType::Collapse50: return "T3/50 circles";
    case FiberType::Collapse25: return "T3/25 circles";
    case FiberType::Collapse5Tori: return "T3/5 two-tori";
    case FiberType::I5: return "I5";
    case FiberType::II5x5: return "II5x5";
    case FiberType::III5: return "III5";
  }
  return "?";
}

static void check_radii(double r1, double r2) {
  if (!(r1 >= 0) || !(r2 >= 0) || !std::isfinite(r1) || !std::isfinite(r2))
    throw Error(ErrorKind::InvalidArgument, "chart radii must be finite and >= 0");
}

LocusStratum gamma_tilde_membership(double r1, double r2, double tol) {
  check_radii(r1, r2);
  const double a = std::pow(r1, 5), b = std::pow(r2, 5);
  const double e[3] = {a + b - 1, b + 1 - a, a + 1 - b};
  LocusStratum s;
  int on = 0;
  for (double x : e) {
    if (x < -tol) return s;
    if (x <= tol) ++on;
  }
  s.tag = on == 0 ? Stratum::Tilde2 : on == 1 ? Stratum::Tilde1 : Stratum::Tilde0;
  return s;
}

LocusStratum gamma_membership(double r1, double r2, double tol) {
  check_radii(r1, r2);
  LocusStratum s;
  const bool one1 = std::abs(r1 - 1) <= tol, one2 = std::abs(r2 - 1) <= tol;
  if (one1 && one2) {
    s.tag = Stratum::Graph3;
  } else if ((one1 && r2 <= tol) || (one2 && r1 <= tol)) {
    s.tag = Stratum::Graph2;
  } else if ((one1 && r2 <= 1 + tol) || (one2 && r1 <= 1 + tol) ||
             (std::abs(r1 - r2) <= tol && std::min(r1, r2) >= 1 - tol)) {
    s.tag = Stratum::Graph1;
  }
  return s;
}

double gamma_distance(double r1, double r2) {
  check_radii(r1, r2);
  const double d1 = std::hypot(r1 - 1, r2 - std::clamp(r2, 0.0, 1.0));
  const double d2 = std::hypot(r2 - 1, r1 - std::clamp(r1, 0.0, 1.0));
  const double m = std::max(1.0, 0.5 * (r1 + r2));
  const double d3 = std::hypot(r1 - m, r2 - m);
  return std::min({d1, d2, d3});
}

LocusStratum classify(const SimplexPoint& p, LocusFamily family, double tol) {
  std::vector<int> support;
  for (std::size_t i = 0; i < p.w.size(); ++i)
    if (p.w[i] > tol) support.push_back(static_cast<int>(i));
  if (support.size() > 3 || p.w.size() < 3) return {};
  for (int i = 0; support.size() < 3; ++i)
    if (std::find(support.begin(), support.end(), i) == support.end()) support.push_back(i);
  std::sort(support.begin(), support.end());
  int base = support[0];
  for (int i : support)
    if (p.w[i] > p.w[base]) base = i;
  std::vector<int> rest;
  for (int i : support)
    if (i != base) rest.push_back(i);
  const double r1 = p.w[rest[0]] / p.w[base], r2 = p.w[rest[1]] / p.w[base];
  LocusStratum s = family == LocusFamily::Tilde ? gamma_tilde_membership(r1, r2, tol) : gamma_membership(r1, r2, tol);
  s.triangle = {support[0], support[1], support[2]};
  return s;
}

std::vector<std::pair<double, double>> sigma_fiber_phases(double r1, double r2, double tol) {
  const Stratum st = gamma_tilde_membership(r1, r2, tol).tag;
  if (st == Stratum::Generic) return {};
  if (st == Stratum::Tilde0) throw Error(ErrorKind::NumericalDegeneracy, "corner of the curved triangle");
  const double a = std::pow(r1, 5), b = std::pow(r2, 5);
  // |a u + 1| = b: law of cosines for the triangle with sides a, b, 1.
  const double c = std::clamp((b * b - 1 - a * a) / (2 * a), -1.0, 1.0);
  std::vector<double> phi1;
  if (st == Stratum::Tilde2) {
    phi1 = {std::acos(c), -std::acos(c)};
  } else {
    phi1 = {c < 0 ? M_PI : 0.0};
  }
  std::vector<std::pair<double, double>> out;
  for (double p1 : phi1) {
    const cplx v = (-1.0 - a * std::polar(1.0, p1)) / b;
    const double p2 = std::arg(v);
    for (int k = 0; k < 5; ++k)
      for (int l = 0; l < 5; ++l) out.push_back({wrap((p1 + kTwoPi * k) / 5), wrap((p2 + kTwoPi * l) / 5)});
  }
  return out;
}

int sigma_fiber_count(double r1, double r2, double tol) {
  return static_cast<int>(sigma_fiber_phases(r1, r2, tol).size());
}

int phase_loop_components(const std::vector<std::pair<double, double>>& path) {
  if (path.size() < 3) throw Error(ErrorKind::InvalidArgument, "path too short");
  std::vector<std::array<double, 2>> plus;
  for (auto [r1, r2] : path) {
    const double a = std::pow(r1, 5), b = std::pow(r2, 5);
    const double c = (b * b - 1 - a * a) / (2 * a);
    if (c < -1 - 1e-9 || c > 1 + 1e-9 || b == 0.0)
      throw Error(ErrorKind::InvalidArgument, "path leaves the curved triangle");
    if (std::abs(c) >= 1 - 1e-12) {
      // Degenerate triangle: snap, since sin(p1)/b blows up rounding when b is small.
      const double p1 = c < 0 ? M_PI : 0.0;
      plus.push_back({p1, -1.0 - a * std::cos(p1) >= 0 ? 0.0 : M_PI});
      continue;
    }
    const double p1 = std::acos(c);
    plus.push_back({p1, std::arg((-1.0 - a * std::polar(1.0, p1)) / b)});
  }
  // The minus branch is the conjugate; both meet where the triangle degenerates.
  for (const auto& e : {path.front(), path.back()}) {
    const double a = std::pow(e.first, 5), b = std::pow(e.second, 5);
    if (std::abs(std::abs((b * b - 1 - a * a) / (2 * a)) - 1) > 1e-9)
      throw Error(ErrorKind::InvalidArgument, "path must start and end on the boundary");
  }
  double w[2] = {0, 0};
  for (int k = 0; k < 2; ++k) {
    for (std::size_t i = 1; i < plus.size(); ++i) w[k] += circ(plus[i][k] - plus[i - 1][k]);
    // Back along the conjugate branch.
    for (std::size_t i = plus.size() - 1; i > 0; --i) w[k] += circ(-plus[i - 1][k] + plus[i][k]);
    w[k] += circ(plus[0][k] + plus[0][k]);
  }
  const int w1 = static_cast<int>(std::lround(w[0] / kTwoPi)), w2 = static_cast<int>(std::lround(w[1] / kTwoPi));
  // Lifts through theta = phi / 5: 25 over the order of (w1, w2) in (Z/5)^2.
  const bool trivial = ((w1 % 5) + 5) % 5 == 0 && ((w2 % 5) + 5) % 5 == 0;
  return trivial ? 25 : 5;
}

GraphCensus type_I_census(double rho) {
  if (!(rho > 0 && rho < 1)) throw Error(ErrorKind::InvalidArgument, "leg parameter must lie in (0, 1)");
  // Curve moduli over the leg point (1, rho): (r, rho r) for r <= 1, (r, rho) beyond.
  const double lo = std::pow(1 + std::pow(rho, 5), -0.2), hi = std::pow(1 + std::pow(rho, 5), 0.2);
  std::vector<std::pair<double, double>> path;
  const int N = 4000;
  for (int i = 0; i <= N; ++i) {
    const double r = lo + (hi - lo) * i / N;
    path.push_back({r, rho * std::min(r, 1.0)});
  }
  GraphCensus g;
  const int circles = phase_loop_components(path);
  g.vertices = circles;
  g.edges = circles;
  g.faces = circles;
  return g;
}

GraphCensus type_III_census() {
  // Over (1, 0): x2 = 0 and x1^5 = -1 on the fiber circle |x1| = 1.
  GraphCensus g;
  std::vector<double> roots;
  for (int k = 0; k < 5; ++k) roots.push_back(wrap((M_PI + kTwoPi * k) / 5));
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }),
              roots.end());
  g.vertices = static_cast<int>(roots.size());
  g.edges = 0;
  g.faces = g.vertices;
  return g;
}

ArcGraph type_II_graph(int families, int raster) {
  ArcGraph G;
  const double lo = kTwoPi / 15, len = kTwoPi / 15;  // cos(5 t) <= -1/2 on [2pi/15, 4pi/15] + 2pi m/5
  for (int k = 0; k < 5; ++k)
    for (int m = 0; m < 5; ++m) {
      const double t = lo + kTwoPi * m / 5, c = kTwoPi * k / 5;
      if (families & 1) G.arcs.push_back({1, {t, wrap(c - t)}, {len, -len}});
      if (families & 2) G.arcs.push_back({2, {t, wrap(2 * t - c)}, {len, 2 * len}});
      if (families & 4) G.arcs.push_back({4, {wrap(2 * t - c), t}, {2 * len, len}});
    }
  auto same = [](const std::array<double, 2>& p, const std::array<double, 2>& q) {
    return std::abs(circ(p[0] - q[0])) < 1e-9 && std::abs(circ(p[1] - q[1])) < 1e-9;
  };
  for (const auto& arc : G.arcs)
    for (double s : {0.0, 1.0}) {
      std::array<double, 2> p{wrap(arc.start[0] + s * arc.delta[0]), wrap(arc.start[1] + s * arc.delta[1])};
      if (std::none_of(G.vertices.begin(), G.vertices.end(), [&](const auto& q) { return same(p, q); }))
        G.vertices.push_back(p);
    }
  // Interior crossings: p + s d = q + u e + 2 pi n.
  for (std::size_t i = 0; i < G.arcs.size(); ++i)
    for (std::size_t j = i + 1; j < G.arcs.size(); ++j) {
      const auto &A = G.arcs[i], &B = G.arcs[j];
      const double det = -A.delta[0] * B.delta[1] + A.delta[1] * B.delta[0];
      if (std::abs(det) < 1e-14) continue;
      for (int n1 = -3; n1 <= 3; ++n1)
        for (int n2 = -3; n2 <= 3; ++n2) {
          const double rx = B.start[0] + kTwoPi * n1 - A.start[0], ry = B.start[1] + kTwoPi * n2 - A.start[1];
          // s d - u e = r
          const double s = (-rx * B.delta[1] + ry * B.delta[0]) / det;
          const double u = (A.delta[0] * ry - A.delta[1] * rx) / det;
          if (s > 1e-9 && s < 1 - 1e-9 && u > 1e-9 && u < 1 - 1e-9) ++G.interior_crossings;
        }
    }
  G.census.vertices = static_cast<int>(G.vertices.size()) + G.interior_crossings;
  G.census.edges = static_cast<int>(G.arcs.size()) + 2 * G.interior_crossings;

  // Faces: flood fill of the torus raster with the arcs blocked.
  const int N = raster;
  std::vector<char> blocked(static_cast<std::size_t>(N) * N, 0);
  const double px = kTwoPi / N;
  for (const auto& arc : G.arcs) {
    const double L = std::hypot(arc.delta[0], arc.delta[1]);
    const int steps = static_cast<int>(std::ceil(4 * L / px));
    for (int q = 0; q <= steps; ++q) {
      const double s = double(q) / steps;
      const int i = static_cast<int>(wrap(arc.start[0] + s * arc.delta[0]) / px);
      const int j = static_cast<int>(wrap(arc.start[1] + s * arc.delta[1]) / px);
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) blocked[((i + di + N) % N) * N + (j + dj + N) % N] = 1;
    }
  }
  std::vector<int> label(blocked.size(), -1);
  int faces = 0;
  std::vector<int> stack;
  for (int start = 0; start < N * N; ++start) {
    if (blocked[start] || label[start] >= 0) continue;
    label[start] = faces;
    stack.push_back(start);
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      const int i = cur / N, j = cur % N;
      const int nb[4] = {((i + 1) % N) * N + j, ((i + N - 1) % N) * N + j, i * N + (j + 1) % N, i * N + (j + N - 1) % N};
      for (int x : nb)
        if (!blocked[x] && label[x] < 0) {
          label[x] = faces;
          stack.push_back(x);
        }
    }
    ++faces;
  }
  G.census.faces = faces;
  return G;
}

FiberModel fiber_type(double r1, double r2, LocusFamily family, double tol) {
  FiberModel f;
  if (family == LocusFamily::Tilde) {
    switch (gamma_tilde_membership(r1, r2, tol).tag) {
      case Stratum::Generic: return f;
      case Stratum::Tilde2: f.type = FiberType::Collapse50; break;
      case Stratum::Tilde1: f.type = FiberType::Collapse25; break;
      case Stratum::Tilde0:
        f.type = FiberType::Collapse5Tori;
        f.singular_points = 5;
        f.census = {5, 0, 0};
        f.euler = 5;
        return f;
      default: throw Error(ErrorKind::UnclassifiedStratum, "unexpected stratum");
    }
    f.singular_points = sigma_fiber_count(r1, r2, tol);
    f.census = {f.singular_points, 0, 0};
    f.euler = f.singular_points;
    return f;
  }
  const Stratum st = gamma_membership(r1, r2, tol).tag;
  switch (st) {
    case Stratum::Generic: return f;
    case Stratum::Graph1: {
      f.type = FiberType::I5;
      double rho;
      if (std::abs(r1 - 1) <= tol && r2 < 1 - tol) rho = r2;
      else if (std::abs(r2 - 1) <= tol && r1 < 1 - tol) rho = r1;
      else rho = 1.0 / std::max(r1, r2);  // diagonal leg, by modulus inversion
      if (!(rho > 0 && rho < 1)) throw Error(ErrorKind::UnclassifiedStratum, "leg point too close to a vertex");
      f.census = type_I_census(rho);
      break;
    }
    case Stratum::Graph2:
      f.type = FiberType::III5;
      f.census = type_III_census();
      break;
    case Stratum::Graph3:
      f.type = FiberType::II5x5;
      f.census = type_II_graph().census;
      break;
    default: throw Error(ErrorKind::UnclassifiedStratum, "unexpected stratum");
  }
  f.singular_points = f.census.vertices;
  f.euler = f.census.euler();
  return f;
}

std::vector<LocusCell> locus_grid(LocusFamily family, int grid, double rmax, double tol) {
  if (grid < 1 || !(rmax > 0)) throw Error(ErrorKind::InvalidArgument, "grid must be >= 1 and rmax > 0");
  const std::size_t n = static_cast<std::size_t>(grid + 1);
  std::vector<LocusCell> cells(n * n);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double r1 = rmax * i / grid, r2 = rmax * j / grid;
      const Stratum t = family == LocusFamily::Tilde ? gamma_tilde_membership(r1, r2, tol).tag
                                                     : gamma_membership(r1, r2, tol).tag;
      cells[i * n + j] = {r1, r2, t};
    }
  });
  return cells;
}

nlohmann::json fiber_to_json(const FiberModel& f) {
  return {{"type", to_string(f.type)},
          {"singular_points", f.singular_points},
          {"vertices", f.census.vertices},
          {"edges", f.census.edges},
          {"faces", f.census.faces},
          {"euler", f.euler}};
}

}  // namespace syzflow
