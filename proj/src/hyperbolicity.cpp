#include "syzflow/hyperbolicity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "syzflow/parallel.hpp"

namespace syzflow {

RVec to_real(const CVec& z) {
  const auto n = z.size();
  RVec x(2 * n);
  x.head(n) = z.real();
  x.tail(n) = z.imag();
  return x;
}

CVec to_complex(const RVec& x) {
  const auto n = x.size() / 2;
  CVec z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = cplx(x(i), x(n + i));
  return z;
}

RVec HomogeneousField::v0(const RVec& theta) const {
  RVec X = field(theta);
  return X - X.dot(theta) * theta;
}

double HomogeneousField::p0(const RVec& theta) const { return field(theta).dot(theta); }

RVec HomogeneousField::ratio(const RVec& theta) const {
  RVec X = field(theta);
  const double p = X.dot(theta);
  RVec v = X - p * theta;
  if (p == 0.0) return RVec::Constant(v.size(), std::numeric_limits<double>::infinity());
  return v / p;
}

HomogeneousField model_ii_field(int n) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "model II field needs n >= 2");
  HomogeneousField f;
  f.dim = 2 * n;
  f.degree = n - 1;
  f.field = [n](const RVec& x) {
    CVec z = to_complex(x);
    RVec out(2 * n);
    for (int k = 0; k < n; ++k) {
      cplx g = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != k) g *= z(j);
      // grad Re s = (Re ds/dz, -Im ds/dz)
      out(k) = g.real();
      out(n + k) = -g.imag();
    }
    return out;
  };
  f.fhat = [](const RVec& x) {
    CVec z = to_complex(x);
    cplx s = 1.0;
    for (Eigen::Index k = 0; k < z.size(); ++k) s *= z(k);
    return s.real();
  };
  return f;
}

HomogeneousField reversed_tangential(const HomogeneousField& f) {
  HomogeneousField g = f;
  g.fhat = nullptr;
  auto base = f.field;
  g.field = [base](const RVec& x) {
    RVec X = base(x);
    const double r2 = x.squaredNorm();
    if (r2 == 0.0) return X;
    const double radial = X.dot(x) / r2;
    return RVec(2 * radial * x - X);
  };
  return g;
}

namespace {

RVec normalized(const RVec& x) { return x / x.norm(); }

// Orthonormal basis of the tangent space at theta.
RMat tangent_basis(const RVec& theta) {
  const auto D = theta.size();
  RMat A(D, 1);
  A.col(0) = theta;
  Eigen::HouseholderQR<RMat> qr(A);
  RMat Q = qr.householderQ() * RMat::Identity(D, D);
  return Q.rightCols(D - 1);
}

// Orthonormal completion of span(theta, T) inside R^D.
RMat complement(const RVec& theta, const RMat& T) {
  const auto D = theta.size();
  RMat A(D, 1 + T.cols());
  A.col(0) = theta;
  if (T.cols() > 0) A.rightCols(T.cols()) = T;
  Eigen::HouseholderQR<RMat> qr(A);
  RMat Q = qr.householderQ() * RMat::Identity(D, D);
  return Q.rightCols(D - A.cols());
}

struct Refined {
  RVec theta;
  double residual = std::numeric_limits<double>::infinity();
};

Refined refine(const HomogeneousField& f, RVec theta, const SphereGrid& g) {
  Refined out;
  RVec u = f.ratio(theta);
  double res = u.norm();
  const double h = 1e-7;
  for (int it = 0; it < g.refine_iters && std::isfinite(res) && res >= g.refine_tol; ++it) {
    RMat T = tangent_basis(theta);
    RMat J(theta.size(), T.cols());
    for (Eigen::Index k = 0; k < T.cols(); ++k)
      J.col(k) = (f.ratio(normalized(theta + h * T.col(k))) - f.ratio(normalized(theta - h * T.col(k)))) /
                 (2 * h);
    if (!J.allFinite()) break;
    RVec step = J.completeOrthogonalDecomposition().solve(-u);
    const double len = step.norm();
    if (len > 0.2) step *= 0.2 / len;
    RVec next = normalized(theta + T * step);
    RVec un = f.ratio(next);
    const double rn = un.norm();
    if (!(rn < res)) break;
    theta = next;
    u = un;
    res = rn;
  }
  out.theta = theta;
  out.residual = res;
  return out;
}

// +1, -1 or 0 for the sign of p0 around theta.
int local_sign(const HomogeneousField& f, const RVec& theta, double radius) {
  RMat T = tangent_basis(theta);
  bool pos = false, neg = false;
  auto look = [&](const RVec& x) {
    const double p = f.p0(x);
    if (p > 0) pos = true;
    if (p < 0) neg = true;
  };
  look(theta);
  for (Eigen::Index k = 0; k < T.cols(); ++k) {
    look(normalized(theta + radius * T.col(k)));
    look(normalized(theta - radius * T.col(k)));
  }
  if (pos && !neg) return 1;
  if (neg && !pos) return -1;
  return 0;
}

}  // namespace

ZSets z_sets(const HomogeneousField& f, const SphereGrid& grid) {
  std::mt19937_64 rng(grid.seed);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<RVec> pts(grid.points);
  for (auto& p : pts) {
    p.resize(f.dim);
    for (int k = 0; k < f.dim; ++k) p(k) = N(rng);
    p.normalize();
  }
  // 2 = candidate refined into Z, 1 = candidate only, 0 = skipped.
  std::vector<int> status(pts.size(), 0), sign(pts.size(), 0);
  std::vector<RVec> found(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    const double r0 = f.ratio(pts[i]).norm();
    if (!(r0 < grid.candidate)) return;
    status[i] = 1;
    Refined r = refine(f, pts[i], grid);
    if (!(r.residual < grid.threshold)) return;
    status[i] = 2;
    found[i] = r.theta;
    sign[i] = local_sign(f, r.theta, grid.sign_radius);
  });
  ZSets z;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (status[i] >= 1) ++z.candidates;
    if (status[i] != 2) continue;
    ++z.refined;
    (sign[i] > 0 ? z.plus : sign[i] < 0 ? z.minus : z.zero).push_back(found[i]);
  }
  return z;
}

RMat normal_frame(const std::vector<RVec>& cloud, std::size_t index, int neighbours, int tangent_dim) {
  if (index >= cloud.size()) throw Error(ErrorKind::InvalidArgument, "frame index out of range");
  const RVec& theta = cloud[index];
  const auto D = theta.size();
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t j = 0; j < cloud.size(); ++j)
    if (j != index) d.push_back({(cloud[j] - theta).squaredNorm(), j});
  const std::size_t k = std::min<std::size_t>(neighbours, d.size());
  std::partial_sort(d.begin(), d.begin() + k, d.end());
  RMat C = RMat::Zero(D, D);
  for (std::size_t j = 0; j < k; ++j) {
    RVec v = cloud[d[j].second] - theta;
    v -= v.dot(theta) * theta;
    C += v * v.transpose();
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(C);
  // Ascending; the radial direction sits among the smallest.
  Eigen::VectorXd ev = es.eigenvalues().reverse();
  RMat vecs = es.eigenvectors().rowwise().reverse();
  int m = tangent_dim;
  if (m < 0) {
    // Normal spread is curvature-sized (~ radius^4); the smallest normal
    // eigenvalues can differ by orders of magnitude, so compare with the top one.
    m = 0;
    for (Eigen::Index i = 0; i < D - 1; ++i)
      if (ev(i) >= 0.05 * ev(0)) ++m;
  }
  if (m < 0 || m >= D - 1) throw Error(ErrorKind::InvalidArgument, "bad tangent dimension");
  return complement(theta, vecs.leftCols(m));
}

BilinearForm normal_bilinear_form(const HomogeneousField& f, const RVec& theta, const RMat& frame,
                                  double step, double margin, double det_threshold) {
  const auto k = frame.cols();
  auto D = [&](Eigen::Index i, double h) {
    RVec a = f.ratio(normalized(theta + h * frame.col(i)));
    RVec b = f.ratio(normalized(theta - h * frame.col(i)));
    return RVec(frame.transpose() * (a - b) / (2 * h));
  };
  BilinearForm out;
  out.matrix.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) out.matrix.row(i) = ((4 * D(i, step / 2) - D(i, step)) / 3).transpose();
  if (!out.matrix.allFinite()) throw Error(ErrorKind::DegenerateForm, "v0/p0 not finite near the sample");
  if (std::abs(out.matrix.determinant()) < det_threshold)
    throw Error(ErrorKind::DegenerateForm, "determinant below threshold");
  out.eigenvalues = out.matrix.eigenvalues();
  out.max_real = out.eigenvalues.real().maxCoeff();
  out.asymmetry = (out.matrix - out.matrix.transpose()).norm() / out.matrix.norm();
  out.hyperbolic = out.max_real < -margin;
  return out;
}

TubeSamples tube_frames(const std::vector<RVec>& cloud, int max_points, int neighbours) {
  TubeSamples t;
  if (cloud.size() < 2) return t;
  const std::size_t count = std::min<std::size_t>(max_points, cloud.size());
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = i * cloud.size() / count;
  t.base.resize(count);
  t.frames.resize(count);
  parallel_for(count, [&](std::size_t i) {
    t.base[i] = cloud[idx[i]];
    t.frames[i] = normal_frame(cloud, idx[i], neighbours);
  });
  return t;
}

namespace {

double tube_min(const HomogeneousField& f, const TubeSamples& t, double radius, int directions,
                unsigned long long seed, int sgn, int& samples) {
  double mn = std::numeric_limits<double>::infinity();
  std::vector<double> per(t.base.size(), mn);
  parallel_for(t.base.size(), [&](std::size_t i) {
    const RMat& F = t.frames[i];
    const auto k = F.cols();
    std::mt19937_64 rng(seed + i);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<RVec> dirs;
    for (Eigen::Index a = 0; a < k; ++a) {
      dirs.push_back(F.col(a));
      dirs.push_back(-F.col(a));
    }
    while (static_cast<int>(dirs.size()) < std::max<int>(directions, 2 * k)) {
      RVec c(k);
      for (Eigen::Index a = 0; a < k; ++a) c(a) = N(rng);
      dirs.push_back(F * c.normalized());
    }
    const RVec& th0 = t.base[i];
    for (const RVec& w : dirs) {
      RVec th = std::cos(radius) * th0 + std::sin(radius) * w;
      RVec e = radius * (-std::sin(radius) * th0 + std::cos(radius) * w);
      // Z- wants (e, v0) > 0, Z+ wants (e, v0) < 0.
      const double val = sgn < 0 ? e.dot(f.v0(th)) : -e.dot(f.v0(th));
      per[i] = std::min(per[i], val);
    }
  });
  for (std::size_t i = 0; i < t.base.size(); ++i) {
    mn = std::min(mn, per[i]);
    samples += std::max<int>(directions, 2 * static_cast<int>(t.frames[i].cols()));
  }
  return mn;
}

}  // namespace

MarginReport geometric_hyperbolicity_margin(const HomogeneousField& f, const TubeSamples& plus,
                                            const TubeSamples& minus, double radius, int directions,
                                            unsigned long long seed) {
  MarginReport r;
  r.radius = radius;
  r.min_plus = tube_min(f, plus, radius, directions, seed, 1, r.samples);
  r.min_minus = tube_min(f, minus, radius, directions, seed + 7919, -1, r.samples);
  r.margin = std::min(r.min_plus, r.min_minus);
  r.pass = r.samples > 0 && r.margin > 0;
  if (r.samples == 0) r.margin = 0.0;
  return r;
}

MarginScaling margin_scaling(const HomogeneousField& f, const TubeSamples& plus, const TubeSamples& minus,
                             const std::vector<double>& radii) {
  MarginScaling s;
  s.radii = radii;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (double r : radii) {
    const double m = geometric_hyperbolicity_margin(f, plus, minus, r).margin;
    s.margins.push_back(m);
    if (m > 0) {
      const double x = std::log(r), y = std::log(m);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++cnt;
    }
  }
  if (cnt >= 2) s.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return s;
}

RMat sphere_hessian(const HomogeneousField& f, const RVec& theta, const RMat& frame, double step) {
  if (!f.gradient()) throw Error(ErrorKind::InvalidArgument, "sphere Hessian needs a gradient field");
  const auto k = frame.cols();
  auto g = [&](const RVec& a) { return f.fhat(normalized(theta + frame * a)); };
  const double g0 = g(RVec::Zero(k));
  auto H = [&](double h) {
    RMat M(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      RVec ei = RVec::Unit(k, i) * h;
      M(i, i) = (g(ei) - 2 * g0 + g(-ei)) / (h * h);
      for (Eigen::Index j = i + 1; j < k; ++j) {
        RVec ej = RVec::Unit(k, j) * h;
        M(i, j) = M(j, i) = (g(ei + ej) - g(ei - ej) - g(ej - ei) + g(-ei - ej)) / (4 * h * h);
      }
    }
    return M;
  };
  return (4 * H(step / 2) - H(step)) / 3;
}

HessianVerdict sphere_hessian_test(const HomogeneousField& f, const RVec& theta, const RMat& frame,
                                   double step, double degenerate_tol) {
  RMat M = sphere_hessian(f, theta, frame, step);
  RMat S = (M + M.transpose()) / 2;
  HessianVerdict v;
  v.eigenvalues = Eigen::SelfAdjointEigenSolver<RMat>(S).eigenvalues();
  if (v.eigenvalues.cwiseAbs().minCoeff() < degenerate_tol)
    throw Error(ErrorKind::DegenerateHessian, "transverse Hessian has a near-zero eigenvalue");
  v.negative_definite = v.eigenvalues.maxCoeff() < 0;
  v.positive_definite = v.eigenvalues.minCoeff() > 0;
  return v;
}

double spd_plus_antisymmetric_min_real(int dim, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  RMat M(dim, dim), K(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      M(i, j) = N(rng);
      K(i, j) = 5 * N(rng);
    }
  RMat A = M * M.transpose() + 1e-3 * RMat::Identity(dim, dim);
  RMat B = K - K.transpose();
  return (A + B).eigenvalues().real().minCoeff();
}

double model_ii_torus_distance(const RVec& theta, int sign) {
  CVec z = to_complex(theta);
  const auto n = z.size();
  const double rho = 1.0 / std::sqrt(static_cast<double>(n));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += std::arg(z(i));
  const double target = sign > 0 ? 0.0 : M_PI;
  const double shift = std::remainder(total - target, 2 * M_PI) / n;
  double d2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) d2 += std::norm(z(i) - std::polar(rho, std::arg(z(i)) - shift));
  return std::sqrt(d2);
}

HyperbolicitySuite hyperbolicity_suite(int n, const HyperbolicityOptions& opts) {
  HyperbolicitySuite s;
  s.n = n;
  HomogeneousField f = model_ii_field(n);
  ZSets z = z_sets(f, opts.grid);
  s.plus = z.plus.size();
  s.minus = z.minus.size();
  s.zero = z.zero.size();
  for (const auto& t : z.plus) s.hausdorff = std::max(s.hausdorff, model_ii_torus_distance(t, 1));
  for (const auto& t : z.minus) s.hausdorff = std::max(s.hausdorff, model_ii_torus_distance(t, -1));
  TubeSamples tp = tube_frames(z.plus, opts.tube_points), tm = tube_frames(z.minus, opts.tube_points);
  s.form_max_real = -std::numeric_limits<double>::infinity();
  s.hessian_max_plus = -std::numeric_limits<double>::infinity();
  s.hessian_min_minus = std::numeric_limits<double>::infinity();
  const std::size_t forms = std::min<std::size_t>(opts.forms, std::min(tp.base.size(), tm.base.size()));
  for (std::size_t i = 0; i < forms; ++i) {
    // The Z- side mirrors Z+ with p0 < 0, so the form is again negative there.
    for (const auto* t : {&tp, &tm}) {
      BilinearForm b = normal_bilinear_form(f, t->base[i], t->frames[i]);
      s.form_max_real = std::max(s.form_max_real, b.max_real);
      s.form_max_asymmetry = std::max(s.form_max_asymmetry, b.asymmetry);
    }
    s.hessian_max_plus =
        std::max(s.hessian_max_plus, sphere_hessian_test(f, tp.base[i], tp.frames[i]).eigenvalues.maxCoeff());
    s.hessian_min_minus =
        std::min(s.hessian_min_minus, sphere_hessian_test(f, tm.base[i], tm.frames[i]).eigenvalues.minCoeff());
  }
  s.margin = geometric_hyperbolicity_margin(f, tp, tm, opts.tube_radius);
  std::vector<double> radii;
  for (int k = 0; k < 4; ++k) radii.push_back(opts.tube_radius / std::pow(2.0, k));
  s.scaling = margin_scaling(f, tp, tm, radii);
  s.reversed_fails = !geometric_hyperbolicity_margin(reversed_tangential(f), tp, tm, opts.tube_radius).pass;
  return s;
}

nlohmann::json suite_to_json(const HyperbolicitySuite& s) {
  return {{"n", s.n},
          {"z_plus", s.plus},
          {"z_minus", s.minus},
          {"z_zero", s.zero},
          {"hausdorff_to_tori", s.hausdorff},
          {"form_max_real", s.form_max_real},
          {"form_max_asymmetry", s.form_max_asymmetry},
          {"hessian_max_plus", s.hessian_max_plus},
          {"hessian_min_minus", s.hessian_min_minus},
          {"margin", s.margin.margin},
          {"margin_radius", s.margin.radius},
          {"margin_pass", s.margin.pass},
          {"margin_radii", s.scaling.radii},
          {"margin_values", s.scaling.margins},
          {"margin_slope", s.scaling.slope},
          {"reversed_fails", s.reversed_fails}};
}

}  // namespace syzflow
