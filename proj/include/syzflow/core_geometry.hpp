#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "syzflow/errors.hpp"

namespace syzflow {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

struct Monomial {
  cplx coef;
  std::vector<int> exps;
};

class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(int nvars, std::vector<Monomial> terms);

  static Polynomial monomial(int nvars, const std::vector<int>& exps, cplx coef = 1.0);
  static Polynomial constant(int nvars, cplx c);

  int nvars() const { return nvars_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  bool is_zero() const;
  int degree() const;
  bool homogeneous() const;

  cplx eval(const CVec& z) const;
  // Holomorphic partials d/dz_k.
  CVec grad(const CVec& z) const;

 private:
  int nvars_ = 0;
  std::vector<Monomial> terms_;
};

// s = p/q.  A projective pencil lives on homogeneous variables and is evaluated
// through affine charts; otherwise the variables are the affine coordinates.
struct MeromorphicPencil {
  Polynomial p;
  Polynomial q;
  bool projective = false;

  int nvars() const { return p.nvars(); }
  int dim() const { return projective ? p.nvars() - 1 : p.nvars(); }
};

MeromorphicPencil make_pencil(Polynomial p, Polynomial q, bool projective);
// p = 5 z1...z5, q = z1^5 + ... + z5^5.
MeromorphicPencil quintic_pencil();
// s = z2 z3 / z1 on C^3.
MeromorphicPencil example31_pencil();
// s = prod_{i<=m} z_i / prod_{m<i<=m+n} z_i on C^{m+n+l}.
MeromorphicPencil monomial_model_pencil(int m, int n, int l);

// chart < 0 means the coordinates are plain affine coordinates.
struct AffinePoint {
  int chart = -1;
  CVec coords;
};

AffinePoint affine(const CVec& z);
AffinePoint affine(std::initializer_list<cplx> z);
CVec homogeneous(const AffinePoint& pt);
AffinePoint from_homogeneous(const CVec& z, int chart);
AffinePoint to_chart(const AffinePoint& pt, int chart);
int best_chart(const CVec& z);
AffinePoint in_best_chart(const AffinePoint& pt);

// Full variable vector fed to the pencil polynomials.
CVec pencil_args(const MeromorphicPencil& pencil, const AffinePoint& pt);

struct SValue {
  cplx value;
  bool pole = false;
};

SValue eval_s(const MeromorphicPencil& pencil, const AffinePoint& pt);

struct MetricField {
  enum class Kind { Flat, FubiniStudy, Toroidal };
  Kind kind = Kind::Flat;
  std::function<CMat(const AffinePoint&)> eval;

  CMat operator()(const AffinePoint& pt) const { return eval(pt); }
};

MetricField flat_metric();
MetricField fubini_study_metric();
CMat fubini_study_matrix(const CVec& x);

struct TangentVector {
  AffinePoint base;
  CVec v;  // holomorphic components dz_j(X)
};

TangentVector change_chart(const TangentVector& tv, int chart);

// Holomorphic differential of s in the point's coordinates.
CVec ds(const MeromorphicPencil& pencil, const AffinePoint& pt);
cplx ds_apply(const MeromorphicPencil& pencil, const AffinePoint& pt, const CVec& v);

TangentVector gradient_field(const MeromorphicPencil& pencil, const AffinePoint& pt,
                             const MetricField& metric);
// |grad f|^2 for f = Re s.
double gradient_norm2(const MeromorphicPencil& pencil, const AffinePoint& pt,
                      const MetricField& metric);

inline constexpr double kCriticalFloor = 1e-20;

TangentVector normalized_field(const MeromorphicPencil& pencil, const AffinePoint& pt,
                               const MetricField& metric, double floor = kCriticalFloor);
// |q|^2 grad Re(p qbar) - Re(p qbar) grad |q|^2, finite everywhere.
TangentVector smooth_representative(const MeromorphicPencil& pencil, const AffinePoint& pt,
                                    const MetricField& metric);

// Real inner product Re(u^T G conj(w)).
double metric_inner(const CMat& G, const CVec& u, const CVec& w);

void to_json(nlohmann::json& j, const Polynomial& p);
void from_json(const nlohmann::json& j, Polynomial& p);
void to_json(nlohmann::json& j, const MeromorphicPencil& p);
void from_json(const nlohmann::json& j, MeromorphicPencil& p);
nlohmann::json point_to_json(const AffinePoint& pt);
AffinePoint point_from_json(const nlohmann::json& j);

}  // namespace syzflow
