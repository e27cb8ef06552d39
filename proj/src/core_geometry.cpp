#include "syzflow/core_geometry.hpp"

#include <cmath>

namespace syzflow {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::IndeterminatePoint: return "IndeterminatePoint";
    case ErrorKind::PolePoint: return "PolePoint";
    case ErrorKind::CriticalPoint: return "CriticalPoint";
    case ErrorKind::CriticalPointHit: return "CriticalPointHit";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::MaxStepsExceeded: return "MaxStepsExceeded";
    case ErrorKind::OffVariety: return "OffVariety";
    case ErrorKind::ZeroCoordinate: return "ZeroCoordinate";
    case ErrorKind::ContractionFailure: return "ContractionFailure";
    case ErrorKind::EigenvalueViolation: return "EigenvalueViolation";
    case ErrorKind::DegenerateForm: return "DegenerateForm";
    case ErrorKind::DegenerateHessian: return "DegenerateHessian";
    case ErrorKind::NumericalDegeneracy: return "NumericalDegeneracy";
    case ErrorKind::UnclassifiedStratum: return "UnclassifiedStratum";
    case ErrorKind::FormulaMismatch: return "FormulaMismatch";
    case ErrorKind::QuadratureNonconvergence: return "QuadratureNonconvergence";
    case ErrorKind::NotPositive: return "NotPositive";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

cplx ipow(cplx z, int e) {
  cplx r = 1.0;
  while (e > 0) {
    if (e & 1) r *= z;
    z *= z;
    e >>= 1;
  }
  return r;
}

int hom_index(int chart, int j) { return (chart >= 0 && j >= chart) ? j + 1 : j; }

CVec restrict_to_chart(const CVec& full, int chart) {
  if (chart < 0) return full;
  CVec out(full.size() - 1);
  for (int j = 0; j < out.size(); ++j) out(j) = full(hom_index(chart, j));
  return out;
}

}  // namespace

Polynomial::Polynomial(int nvars, std::vector<Monomial> terms)
    : nvars_(nvars), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (static_cast<int>(t.exps.size()) != nvars_)
      throw Error(ErrorKind::InvalidArgument, "monomial exponent length mismatch");
    for (int e : t.exps)
      if (e < 0) throw Error(ErrorKind::InvalidArgument, "negative exponent");
  }
}

Polynomial Polynomial::monomial(int nvars, const std::vector<int>& exps, cplx coef) {
  return Polynomial(nvars, {Monomial{coef, exps}});
}

Polynomial Polynomial::constant(int nvars, cplx c) {
  return Polynomial(nvars, {Monomial{c, std::vector<int>(nvars, 0)}});
}

bool Polynomial::is_zero() const {
  for (const auto& t : terms_)
    if (t.coef != cplx(0.0)) return false;
  return true;
}

int Polynomial::degree() const {
  int d = -1;
  for (const auto& t : terms_) {
    if (t.coef == cplx(0.0)) continue;
    int s = 0;
    for (int e : t.exps) s += e;
    d = std::max(d, s);
  }
  return d;
}

bool Polynomial::homogeneous() const {
  int d = degree();
  for (const auto& t : terms_) {
    if (t.coef == cplx(0.0)) continue;
    int s = 0;
    for (int e : t.exps) s += e;
    if (s != d) return false;
  }
  return true;
}

cplx Polynomial::eval(const CVec& z) const {
  cplx sum = 0.0;
  for (const auto& t : terms_) {
    cplx m = t.coef;
    for (int k = 0; k < nvars_; ++k)
      if (t.exps[k]) m *= ipow(z(k), t.exps[k]);
    sum += m;
  }
  return sum;
}

CVec Polynomial::grad(const CVec& z) const {
  CVec g = CVec::Zero(nvars_);
  for (const auto& t : terms_) {
    for (int k = 0; k < nvars_; ++k) {
      if (t.exps[k] == 0) continue;
      cplx m = t.coef * static_cast<double>(t.exps[k]);
      for (int l = 0; l < nvars_; ++l) {
        int e = (l == k) ? t.exps[l] - 1 : t.exps[l];
        if (e) m *= ipow(z(l), e);
      }
      g(k) += m;
    }
  }
  return g;
}

MeromorphicPencil make_pencil(Polynomial p, Polynomial q, bool projective) {
  if (p.nvars() != q.nvars())
    throw Error(ErrorKind::InvalidArgument, "p and q have different variable counts");
  if (p.is_zero() || q.is_zero())
    throw Error(ErrorKind::InvalidArgument, "p and q must be nonzero");
  if (projective && (!p.homogeneous() || !q.homogeneous() || p.degree() != q.degree()))
    throw Error(ErrorKind::InvalidArgument, "projective pencil needs equal homogeneous degrees");
  return MeromorphicPencil{std::move(p), std::move(q), projective};
}

MeromorphicPencil quintic_pencil() {
  Polynomial p = Polynomial::monomial(5, {1, 1, 1, 1, 1}, 5.0);
  std::vector<Monomial> qs;
  for (int k = 0; k < 5; ++k) {
    std::vector<int> e(5, 0);
    e[k] = 5;
    qs.push_back({1.0, e});
  }
  return make_pencil(std::move(p), Polynomial(5, qs), true);
}

MeromorphicPencil example31_pencil() {
  return make_pencil(Polynomial::monomial(3, {0, 1, 1}), Polynomial::monomial(3, {1, 0, 0}), false);
}

MeromorphicPencil monomial_model_pencil(int m, int n, int l) {
  if (m < 1 || n < 0 || l < 0) throw Error(ErrorKind::InvalidArgument, "model needs m>=1, n,l>=0");
  int N = m + n + l;
  std::vector<int> ep(N, 0), eq(N, 0);
  for (int i = 0; i < m; ++i) ep[i] = 1;
  for (int i = m; i < m + n; ++i) eq[i] = 1;
  return make_pencil(Polynomial::monomial(N, ep), Polynomial::monomial(N, eq), false);
}

AffinePoint affine(const CVec& z) { return AffinePoint{-1, z}; }

AffinePoint affine(std::initializer_list<cplx> z) {
  CVec v(static_cast<Eigen::Index>(z.size()));
  int i = 0;
  for (auto c : z) v(i++) = c;
  return AffinePoint{-1, v};
}

CVec homogeneous(const AffinePoint& pt) {
  if (pt.chart < 0) return pt.coords;
  const int n = static_cast<int>(pt.coords.size());
  if (pt.chart > n) throw Error(ErrorKind::InvalidArgument, "chart index out of range");
  CVec z(n + 1);
  for (int j = 0, k = 0; j <= n; ++j) z(j) = (j == pt.chart) ? cplx(1.0) : pt.coords(k++);
  return z;
}

AffinePoint from_homogeneous(const CVec& z, int chart) {
  if (chart < 0 || chart >= z.size()) throw Error(ErrorKind::InvalidArgument, "chart index out of range");
  if (std::abs(z(chart)) == 0.0) throw Error(ErrorKind::ZeroCoordinate, "chart coordinate vanishes");
  CVec x(z.size() - 1);
  for (int j = 0, k = 0; j < z.size(); ++j)
    if (j != chart) x(k++) = z(j) / z(chart);
  return AffinePoint{chart, x};
}

AffinePoint to_chart(const AffinePoint& pt, int chart) {
  if (pt.chart < 0) throw Error(ErrorKind::InvalidArgument, "point is not in a projective chart");
  return from_homogeneous(homogeneous(pt), chart);
}

int best_chart(const CVec& z) {
  int best = 0;
  for (int j = 1; j < z.size(); ++j)
    if (std::abs(z(j)) > std::abs(z(best))) best = j;
  return best;
}

AffinePoint in_best_chart(const AffinePoint& pt) {
  if (pt.chart < 0) return pt;
  CVec z = homogeneous(pt);
  return from_homogeneous(z, best_chart(z));
}

CVec pencil_args(const MeromorphicPencil& pencil, const AffinePoint& pt) {
  if (pencil.projective) {
    if (pt.chart < 0) throw Error(ErrorKind::InvalidArgument, "projective pencil needs a chart");
    CVec z = homogeneous(pt);
    if (z.size() != pencil.nvars()) throw Error(ErrorKind::InvalidArgument, "dimension mismatch");
    return z;
  }
  if (pt.coords.size() != pencil.nvars()) throw Error(ErrorKind::InvalidArgument, "dimension mismatch");
  return pt.coords;
}

SValue eval_s(const MeromorphicPencil& pencil, const AffinePoint& pt) {
  CVec z = pencil_args(pencil, pt);
  cplx P = pencil.p.eval(z), Q = pencil.q.eval(z);
  if (P == cplx(0.0) && Q == cplx(0.0))
    throw Error(ErrorKind::IndeterminatePoint, "p = q = 0");
  if (Q == cplx(0.0)) return SValue{cplx(0.0), true};
  cplx s = P / Q;
  if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) return SValue{cplx(0.0), true};
  return SValue{s, false};
}

CMat fubini_study_matrix(const CVec& x) {
  const double n2 = x.squaredNorm();
  const double w = 1.0 + n2;
  const int n = static_cast<int>(x.size());
  CMat g(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      g(j, k) = ((j == k ? w : 0.0) - std::conj(x(j)) * x(k)) / (w * w);
  return g;
}

MetricField flat_metric() {
  return MetricField{MetricField::Kind::Flat, [](const AffinePoint& pt) -> CMat {
                       const auto n = pt.coords.size();
                       return CMat::Identity(n, n);
                     }};
}

MetricField fubini_study_metric() {
  return MetricField{MetricField::Kind::FubiniStudy,
                     [](const AffinePoint& pt) -> CMat { return fubini_study_matrix(pt.coords); }};
}

TangentVector change_chart(const TangentVector& tv, int chart) {
  if (tv.base.chart < 0) throw Error(ErrorKind::InvalidArgument, "tangent vector not in a chart");
  CVec z = homogeneous(tv.base);
  CVec dz(z.size());
  for (int j = 0, k = 0; j < z.size(); ++j) dz(j) = (j == tv.base.chart) ? cplx(0.0) : tv.v(k++);
  AffinePoint nb = from_homogeneous(z, chart);
  const cplx zb = z(chart), dzb = dz(chart);
  CVec nv(z.size() - 1);
  for (int j = 0, k = 0; j < z.size(); ++j)
    if (j != chart) nv(k++) = dz(j) / zb - z(j) * dzb / (zb * zb);
  return TangentVector{nb, nv};
}

CVec ds(const MeromorphicPencil& pencil, const AffinePoint& pt) {
  CVec z = pencil_args(pencil, pt);
  cplx P = pencil.p.eval(z), Q = pencil.q.eval(z);
  if (P == cplx(0.0) && Q == cplx(0.0)) throw Error(ErrorKind::IndeterminatePoint, "p = q = 0");
  if (Q == cplx(0.0)) throw Error(ErrorKind::PolePoint, "q = 0");
  CVec d = (pencil.p.grad(z) * Q - P * pencil.q.grad(z)) / (Q * Q);
  if (!d.allFinite()) throw Error(ErrorKind::PolePoint, "ds overflows");
  return restrict_to_chart(d, pencil.projective ? pt.chart : -1);
}

cplx ds_apply(const MeromorphicPencil& pencil, const AffinePoint& pt, const CVec& v) {
  return ds(pencil, pt).transpose() * v;
}

namespace {

CVec raise_index(const CMat& G, const CVec& covector) {
  // Solve G^T v = conj(covector).
  return G.transpose().partialPivLu().solve(covector.conjugate());
}

}  // namespace

double metric_inner(const CMat& G, const CVec& u, const CVec& w) {
  return (u.transpose() * G * w.conjugate()).value().real();
}

TangentVector gradient_field(const MeromorphicPencil& pencil, const AffinePoint& pt,
                             const MetricField& metric) {
  CVec d = ds(pencil, pt);
  CVec v = raise_index(metric(pt), d);
  if (!v.allFinite()) throw Error(ErrorKind::PolePoint, "gradient overflows");
  return TangentVector{pt, v};
}

double gradient_norm2(const MeromorphicPencil& pencil, const AffinePoint& pt,
                      const MetricField& metric) {
  CVec d = ds(pencil, pt);
  CVec v = raise_index(metric(pt), d);
  return (d.transpose() * v).value().real();
}

TangentVector normalized_field(const MeromorphicPencil& pencil, const AffinePoint& pt,
                               const MetricField& metric, double floor) {
  CVec d = ds(pencil, pt);
  CVec v = raise_index(metric(pt), d);
  const double g2 = (d.transpose() * v).value().real();
  if (!(g2 >= floor)) throw Error(ErrorKind::CriticalPoint, "|grad f|^2 below floor");
  if (!std::isfinite(g2)) throw Error(ErrorKind::PolePoint, "|grad f| overflows");
  return TangentVector{pt, v / g2};
}

TangentVector smooth_representative(const MeromorphicPencil& pencil, const AffinePoint& pt,
                                    const MetricField& metric) {
  CVec z = pencil_args(pencil, pt);
  cplx P = pencil.p.eval(z), Q = pencil.q.eval(z);
  CVec dP = pencil.p.grad(z), dQ = pencil.q.grad(z);
  const double q2 = std::norm(Q);
  const double re_pq = (P * std::conj(Q)).real();
  CVec b = q2 * (std::conj(Q) * dP + std::conj(P) * dQ) - 2.0 * re_pq * std::conj(Q) * dQ;
  b = restrict_to_chart(b, pencil.projective ? pt.chart : -1);
  return TangentVector{pt, raise_index(metric(pt), b)};
}

void to_json(nlohmann::json& j, const Polynomial& p) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : p.terms())
    terms.push_back({{"coef", {t.coef.real(), t.coef.imag()}}, {"exps", t.exps}});
  j = {{"nvars", p.nvars()}, {"terms", terms}};
}

void from_json(const nlohmann::json& j, Polynomial& p) {
  int n = j.at("nvars").get<int>();
  std::vector<Monomial> terms;
  for (const auto& t : j.at("terms")) {
    const auto& c = t.at("coef");
    cplx coef = c.is_array() ? cplx(c.at(0).get<double>(), c.at(1).get<double>())
                             : cplx(c.get<double>(), 0.0);
    terms.push_back({coef, t.at("exps").get<std::vector<int>>()});
  }
  p = Polynomial(n, terms);
}

void to_json(nlohmann::json& j, const MeromorphicPencil& p) {
  j = {{"p", p.p}, {"q", p.q}, {"projective", p.projective}};
}

void from_json(const nlohmann::json& j, MeromorphicPencil& p) {
  p = make_pencil(j.at("p").get<Polynomial>(), j.at("q").get<Polynomial>(),
                  j.value("projective", false));
}

nlohmann::json point_to_json(const AffinePoint& pt) {
  nlohmann::json c = nlohmann::json::array();
  for (int i = 0; i < pt.coords.size(); ++i) c.push_back({pt.coords(i).real(), pt.coords(i).imag()});
  return {{"chart", pt.chart}, {"coords", c}};
}

AffinePoint point_from_json(const nlohmann::json& j) {
  AffinePoint pt;
  const auto& c = j.is_array() ? j : j.at("coords");
  pt.chart = j.is_array() ? -1 : j.value("chart", -1);
  pt.coords.resize(static_cast<Eigen::Index>(c.size()));
  for (size_t i = 0; i < c.size(); ++i)
    pt.coords(static_cast<Eigen::Index>(i)) = cplx(c[i].at(0).get<double>(), c[i].at(1).get<double>());
  return pt;
}

}  // namespace syzflow
