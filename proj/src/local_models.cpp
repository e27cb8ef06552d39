#include "syzflow/local_models.hpp"

#include <cmath>

namespace syzflow {

void validate(const ModelSpec& spec) {
  if (spec.m < 1 || spec.n < 0 || spec.l < 0)
    throw Error(ErrorKind::InvalidArgument, "model needs m >= 1, n >= 0, l >= 0");
}

MeromorphicPencil model_pencil(const ModelSpec& spec) {
  validate(spec);
  return monomial_model_pencil(spec.m, spec.n, spec.l);
}

std::vector<InvariantPair> invariants_of_model(const ModelSpec& spec, const CVec& z) {
  validate(spec);
  if (z.size() != spec.nvars()) throw Error(ErrorKind::InvalidArgument, "point dimension mismatch");
  std::vector<InvariantPair> out;
  const int k = spec.m + spec.n;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      const bool cross = (i < spec.m) != (j < spec.m);
      const double v = cross ? std::norm(z(i)) + std::norm(z(j)) : std::norm(z(i)) - std::norm(z(j));
      out.push_back({i, j, cross, v});
    }
  return out;
}

namespace {

// Re(z1)/|z1| * sqrt(|z1|^2 + |w|^2); 0 at z1 = 0.
double phi2_branch(cplx z1, cplx w) {
  const double a = std::abs(z1);
  if (a == 0.0) return 0.0;
  return z1.real() / a * std::sqrt(a * a + std::norm(w));
}

}  // namespace

std::pair<double, double> phi_pair(const CVec& z, double c, double tol) {
  if (z.size() != 3) throw Error(ErrorKind::InvalidArgument, "phi_pair expects a point of C^3");
  const double scale = std::max(1.0, z.squaredNorm());
  if (std::abs(z(1) * z(2) - c * z(0)) > tol * scale)
    throw Error(ErrorKind::OffVariety, "point is not on z2 z3 = c z1");
  if (c == 0.0 && std::abs(z(0)) > 0 && std::abs((z(1) * z(2) / z(0)).imag()) > tol)
    throw Error(ErrorKind::OffVariety, "Im s != 0");
  const double phi1 = std::norm(z(1)) - std::norm(z(2));
  const double r2 = std::abs(z(1)), r3 = std::abs(z(2));
  double phi2;
  if (std::abs(r2 - r3) < 1e-13)
    phi2 = 0.5 * (phi2_branch(z(0), z(1)) + phi2_branch(z(0), z(2)));
  else
    phi2 = phi2_branch(z(0), r2 < r3 ? z(1) : z(2));
  return {phi1, phi2};
}

CVec extended_coordinates(LocalModel model, const CVec& z, int minimizer) {
  const int first = model == LocalModel::I ? 1 : 0;
  if (z.size() <= first) throw Error(ErrorKind::InvalidArgument, "too few coordinates");
  int m = first;
  for (int k = first + 1; k < z.size(); ++k)
    if (std::abs(z(k)) < std::abs(z(m))) m = k;
  if (minimizer >= 0) {
    if (minimizer < first || minimizer >= z.size())
      throw Error(ErrorKind::InvalidArgument, "minimizer index out of range");
    if (std::abs(z(minimizer)) > std::abs(z(m)) * (1 + 1e-12) + 1e-300)
      throw Error(ErrorKind::InvalidArgument, "given index does not minimize |z_k|");
    m = minimizer;
  }
  const double rm2 = std::norm(z(m));
  CVec Z(z.size());
  if (model == LocalModel::I) {
    const double a = std::abs(z(0));
    if (a == 0.0) {
      if (rm2 > 0) throw Error(ErrorKind::ZeroCoordinate, "z0 = 0 has no phase");
      Z(0) = 0.0;
    } else {
      Z(0) = z(0) / a * std::sqrt(a * a + rm2);
    }
  }
  for (int i = first; i < z.size(); ++i) {
    const double a = std::abs(z(i));
    const double mod2 = std::max(0.0, a * a - rm2);
    // On the seam the two moduli agree analytically; rounding would leave sqrt(ulp).
    if (mod2 == 0.0 || a - std::sqrt(rm2) < 1e-13 * std::max(1.0, a)) {
      Z(i) = 0.0;
    } else {
      Z(i) = z(i) / a * std::sqrt(mod2);
    }
  }
  return Z;
}

CVec xc_point(double c, double r1, double th1, double r2, double th2) {
  if (c == 0.0) throw Error(ErrorKind::InvalidArgument, "xc_point needs c != 0");
  CVec z(3);
  z(0) = std::polar(r1, th1);
  z(1) = std::polar(r2, th2);
  z(2) = c * z(0) / z(1);
  return z;
}

double section_radius2(const CVec& z, double c) {
  auto [p1, p2] = phi_pair(z, c);
  return p2 * p2 + std::max(p1, 0.0);
}

LipschitzReport lipschitz_probe(double c, double r1, double theta1, double theta2, double h0,
                                int refinements, double margin) {
  if (!(c > 0) || !(r1 > 0)) throw Error(ErrorKind::InvalidArgument, "probe needs c > 0, r1 > 0");
  LipschitzReport rep;
  rep.c = c;
  rep.r1 = r1;
  rep.theta1 = theta1;
  rep.r2 = std::sqrt(c * r1);  // seam r2^2 = c r1
  auto at = [&](double d) { return xc_point(c, r1, theta1, rep.r2 + d, theta2); };
  auto Phi = [&](double d) { return section_radius2(at(d), c); };
  auto phi2 = [&](double d) { return phi_pair(at(d), c).second; };
  const double p0 = phi2(0.0), S0 = Phi(0.0);
  double h = h0;
  rep.min_derivative_gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= refinements; ++k, h *= 0.5) {
    LipschitzLevel lv;
    lv.h = h;
    lv.value_gap = std::max(std::abs(phi2(h) - p0), std::abs(phi2(-h) - p0));
    const double dp = (-3 * S0 + 4 * Phi(h) - Phi(2 * h)) / (2 * h);
    const double dm = (3 * S0 - 4 * Phi(-h) + Phi(-2 * h)) / (2 * h);
    lv.derivative_gap = std::abs(dp - dm);
    rep.min_derivative_gap = std::min(rep.min_derivative_gap, lv.derivative_gap);
    rep.max_derivative_gap = std::max(rep.max_derivative_gap, lv.derivative_gap);
    rep.levels.push_back(lv);
  }
  rep.continuous = true;
  for (size_t k = 1; k < rep.levels.size(); ++k) {
    const double g0 = rep.levels[k - 1].value_gap, g1 = rep.levels[k].value_gap;
    if (g0 == 0.0 && g1 == 0.0) continue;
    rep.value_gap_order = std::log2(g0 / g1);
    if (!(rep.value_gap_order >= 0.8)) rep.continuous = false;
  }
  rep.kink_persists = rep.min_derivative_gap >= margin &&
                      (rep.max_derivative_gap - rep.min_derivative_gap) <= 0.1 * rep.max_derivative_gap;
  rep.pass = rep.continuous && rep.kink_persists;
  return rep;
}

SecondDifferenceReport origin_second_differences(double c, int directions, double h0, int levels) {
  SecondDifferenceReport rep;
  auto phi2 = [&](cplx z2, cplx z3) {
    CVec z(3);
    z << z2 * z3 / c, z2, z3;
    return phi_pair(z, c).second;
  };
  const double f0 = phi2(0.0, 0.0);
  double h = h0;
  for (int k = 0; k < levels; ++k, h *= 0.5) {
    double worst = 0.0;
    for (int d = 0; d < directions; ++d) {
      // Directions spread over phases and modulus ratios of (z2, z3).
      const double a = 2 * M_PI * d / directions, b = 2 * M_PI * ((7 * d) % directions) / directions;
      const double w = 0.25 + 0.75 * ((3 * d) % directions) / double(directions);
      cplx v2 = std::polar(1.0, a), v3 = std::polar(w, b);
      const double sd = std::abs(phi2(h * v2, h * v3) + phi2(-h * v2, -h * v3) - 2 * f0) / (h * h);
      worst = std::max(worst, sd);
    }
    rep.h.push_back(h);
    rep.max_second_difference.push_back(worst);
  }
  const int L = static_cast<int>(rep.h.size());
  rep.growth_exponent = std::log(rep.max_second_difference[L - 1] / rep.max_second_difference[0]) /
                        std::log(rep.h[0] / rep.h[L - 1]);
  rep.bounded = rep.growth_exponent < 0.5;
  return rep;
}

}  // namespace syzflow
