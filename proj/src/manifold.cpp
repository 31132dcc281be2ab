#include "hyperpp/manifold.hpp"

#include <cmath>
#include <string>

namespace hyperpp {

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw DomainError(std::string(what) + ": non-finite coordinates");
}

// Relative drift of the Minkowski constraint above which a point is rejected
// instead of re-projected.
constexpr double kReprojectLimit = 1e-6;

}  // namespace

Curvature::Curvature(double c) : c_(c), sqrt_c_(std::sqrt(c)) {
  if (!std::isfinite(c) || !(c > 0.0)) {
    throw DomainError("curvature magnitude must be finite and > 0, got " + std::to_string(c));
  }
}

double minkowski_tolerance(double x0, Curvature c) noexcept {
  return kMinkowskiTol * std::max(1.0, c.value() * x0 * x0);
}

// ---------------------------------------------------------------------------
// Points

PoincarePoint::PoincarePoint(Vector coords, Curvature c) : coords_(std::move(coords)), c_(c) {
  require_finite(coords_, "PoincarePoint");
  if (coords_.size() < 1) throw ContractError("PoincarePoint: dimension must be >= 1");
  if (!(c_.value() * coords_.squaredNorm() < 1.0)) {
    throw DomainError("PoincarePoint: c*|x|^2 = " +
                      std::to_string(c_.value() * coords_.squaredNorm()) + " is not < 1");
  }
}

PoincarePoint PoincarePoint::origin(Eigen::Index dim, Curvature c) {
  return PoincarePoint(Vector::Zero(dim), c);
}

HyperboloidPoint::HyperboloidPoint(Vector coords, Curvature c) : coords_(std::move(coords)), c_(c) {
  require_finite(coords_, "HyperboloidPoint");
  if (coords_.size() < 2) throw ContractError("HyperboloidPoint: need at least 2 coordinates");
  if (!(coords_[0] > 0.0)) throw DomainError("HyperboloidPoint: time component must be > 0");
  const double inv_c = 1.0 / c_.value();
  const double residual = minkowski_inner(coords_, coords_) + inv_c;
  if (std::abs(residual) <= minkowski_tolerance(coords_[0], c_)) return;
  const double scale = std::max(inv_c, coords_[0] * coords_[0]);
  if (std::abs(residual) > kReprojectLimit * scale) {
    throw DomainError("HyperboloidPoint: <x,x>_L + 1/c = " + std::to_string(residual));
  }
  coords_[0] = std::sqrt(inv_c + coords_.tail(coords_.size() - 1).squaredNorm());
}

HyperboloidPoint HyperboloidPoint::from_space(const Vector& space, Curvature c) {
  Vector coords(space.size() + 1);
  coords[0] = std::sqrt(1.0 / c.value() + space.squaredNorm());
  coords.tail(space.size()) = space;
  return HyperboloidPoint(std::move(coords), c);
}

HyperboloidPoint HyperboloidPoint::origin(Eigen::Index dim, Curvature c) {
  return from_space(Vector::Zero(dim), c);
}

TangentVector::TangentVector(Vector coords, Curvature c, Model m)
    : coords_(std::move(coords)), c_(c), model_(m) {
  require_finite(coords_, "TangentVector");
}

TangentVector TangentVector::poincare(Vector coords, Curvature c) {
  if (coords.size() < 1) throw ContractError("TangentVector: dimension must be >= 1");
  return TangentVector(std::move(coords), c, Model::Poincare);
}

TangentVector TangentVector::hyperboloid(Vector coords, Curvature c) {
  if (coords.size() < 2) throw ContractError("TangentVector: need at least 2 coordinates");
  if (coords[0] != 0.0) {
    throw ContractError("TangentVector: hyperboloid origin tangent vectors have coords[0] == 0");
  }
  return TangentVector(std::move(coords), c, Model::Hyperboloid);
}

TangentVector TangentVector::hyperboloid_from_euclidean(const Vector& euclidean, Curvature c) {
  Vector coords(euclidean.size() + 1);
  coords[0] = 0.0;
  coords.tail(euclidean.size()) = euclidean;
  return hyperboloid(std::move(coords), c);
}

// ---------------------------------------------------------------------------
// Raw kernels

namespace detail {

double tanh_ratio(double norm, double sqrt_c) noexcept {
  const double u = sqrt_c * norm;
  if (norm < kSmallNorm) return 1.0 - u * u / 3.0;
  return std::tanh(u) / u;
}

double sinh_ratio(double norm, double sqrt_c) noexcept {
  const double u = sqrt_c * norm;
  if (norm < kSmallNorm) return 1.0 + u * u / 6.0;
  return std::sinh(u) / u;
}

void poincare_exp0_raw(const double* v, Eigen::Index d, double sqrt_c, double* out) noexcept {
  Eigen::Map<const Vector> vin(v, d);
  const double s = tanh_ratio(vin.norm(), sqrt_c);
  Eigen::Map<Vector>(out, d) = s * vin;
}

void poincare_exp0_vjp(const double* v, const double* g, Eigen::Index d, double sqrt_c,
                       double* out) noexcept {
  Eigen::Map<const Vector> vin(v, d);
  Eigen::Map<const Vector> gin(g, d);
  const double n = vin.norm();
  const double c = sqrt_c * sqrt_c;
  double a;
  double b;
  if (n < kSmallNorm) {
    a = 1.0 - c * n * n / 3.0;
    b = -2.0 * c / 3.0;
  } else {
    const double u = sqrt_c * n;
    const double t = std::tanh(u);
    const double sech2 = 1.0 - t * t;
    a = t / u;
    b = (sech2 / n - t / (sqrt_c * n * n)) / n;
  }
  Eigen::Map<Vector>(out, d) = a * gin + (b * vin.dot(gin)) * vin;
}

void hyperboloid_exp0_raw(const double* v, Eigen::Index d, double sqrt_c, double* out) noexcept {
  Eigen::Map<const Vector> vin(v, d);
  const double n = vin.norm();
  const double u = sqrt_c * n;
  out[0] = (n < kSmallNorm ? 1.0 + u * u / 2.0 : std::cosh(u)) / sqrt_c;
  Eigen::Map<Vector>(out + 1, d) = sinh_ratio(n, sqrt_c) * vin;
}

void hyperboloid_exp0_vjp(const double* v, const double* g, Eigen::Index d, double sqrt_c,
                          double* out) noexcept {
  Eigen::Map<const Vector> vin(v, d);
  Eigen::Map<const Vector> gs(g + 1, d);
  const double g0 = g[0];
  const double n = vin.norm();
  const double c = sqrt_c * sqrt_c;
  double time_coef;  // d x0 / d v = time_coef * v
  double a;
  double b;
  if (n < kSmallNorm) {
    time_coef = sqrt_c;
    a = 1.0 + c * n * n / 6.0;
    b = c / 3.0;
  } else {
    const double u = sqrt_c * n;
    const double sh = std::sinh(u);
    const double ch = std::cosh(u);
    time_coef = sh / n;
    a = sh / u;
    b = (u * ch - sh) / (sqrt_c * n * n * n);
  }
  Eigen::Map<Vector>(out, d) = (g0 * time_coef + b * vin.dot(gs)) * vin + a * gs;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public operations

PoincarePoint poincare_exp0(const TangentVector& v) {
  if (v.model() != TangentVector::Model::Poincare) {
    throw ContractError("poincare_exp0: expected a Poincare tangent vector");
  }
  const Vector& x = v.coords();
  Vector out(x.size());
  detail::poincare_exp0_raw(x.data(), x.size(), v.curvature().sqrt(), out.data());
  return PoincarePoint(std::move(out), v.curvature());
}

Matrix poincare_exp0_jacobian(const TangentVector& v) {
  if (v.model() != TangentVector::Model::Poincare) {
    throw ContractError("poincare_exp0_jacobian: expected a Poincare tangent vector");
  }
  const Vector& x = v.coords();
  const double sqrt_c = v.curvature().sqrt();
  const double c = v.curvature().value();
  const double n = x.norm();
  const auto d = x.size();
  Matrix jac(d, d);
  if (n < kSmallNorm) {
    jac = (1.0 - c * n * n / 3.0) * Matrix::Identity(d, d) - (2.0 * c / 3.0) * x * x.transpose();
    return jac;
  }
  const double u = sqrt_c * n;
  const double t = std::tanh(u);
  const double sech2 = 1.0 - t * t;
  const double direction = sech2 / n - t / (sqrt_c * n * n);
  jac = (t / u) * Matrix::Identity(d, d) + (direction / n) * x * x.transpose();
  return jac;
}

double conformal_factor(const PoincarePoint& x) {
  return 2.0 / (1.0 - x.curvature().value() * x.coords().squaredNorm());
}

Vector conformal_factor_grad(const PoincarePoint& x) {
  const double c = x.curvature().value();
  const double denom = 1.0 - c * x.coords().squaredNorm();
  return (4.0 * c / (denom * denom)) * x.coords();
}

HyperboloidPoint hyperboloid_exp0(const TangentVector& v) {
  if (v.model() != TangentVector::Model::Hyperboloid) {
    throw ContractError("hyperboloid_exp0: expected a hyperboloid tangent vector");
  }
  const Vector& x = v.coords();
  const auto d = x.size() - 1;
  Vector out(d + 1);
  detail::hyperboloid_exp0_raw(x.data() + 1, d, v.curvature().sqrt(), out.data());
  return HyperboloidPoint(std::move(out), v.curvature());
}

Matrix hyperboloid_exp0_jacobian(const TangentVector& v) {
  if (v.model() != TangentVector::Model::Hyperboloid) {
    throw ContractError("hyperboloid_exp0_jacobian: expected a hyperboloid tangent vector");
  }
  const auto d = v.coords().size() - 1;
  const Vector xe = v.coords().tail(d);
  const double sqrt_c = v.curvature().sqrt();
  const double c = v.curvature().value();
  const double n = xe.norm();
  Matrix jac = Matrix::Zero(d + 1, d + 1);
  if (n < kSmallNorm) {
    jac.block(0, 1, 1, d) = sqrt_c * xe.transpose();
    jac.block(1, 1, d, d) =
        (1.0 + c * n * n / 6.0) * Matrix::Identity(d, d) + (c / 3.0) * xe * xe.transpose();
    return jac;
  }
  const double u = sqrt_c * n;
  const double sh = std::sinh(u);
  const double ch = std::cosh(u);
  jac.block(0, 1, 1, d) = (sh / n) * xe.transpose();
  jac.block(1, 1, d, d) = (sh / u) * Matrix::Identity(d, d) +
                          ((u * ch - sh) / (sqrt_c * n * n * n)) * xe * xe.transpose();
  return jac;
}

double minkowski_inner(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ContractError("minkowski_inner: length mismatch");
  if (a.size() < 2) throw ContractError("minkowski_inner: need length >= 2");
  const auto d = a.size() - 1;
  return -a[0] * b[0] + a.tail(d).dot(b.tail(d));
}

HyperboloidPoint poincare_to_hyperboloid(const PoincarePoint& x) {
  const double c = x.curvature().value();
  const double sqrt_c = x.curvature().sqrt();
  const double sq = c * x.coords().squaredNorm();
  const double denom = 1.0 - sq;
  Vector out(x.dim() + 1);
  out[0] = (1.0 + sq) / (sqrt_c * denom);
  out.tail(x.dim()) = (2.0 / denom) * x.coords();
  return HyperboloidPoint(std::move(out), x.curvature());
}

PoincarePoint hyperboloid_to_poincare(const HyperboloidPoint& x) {
  const double sqrt_c = x.curvature().sqrt();
  Vector out = x.space() / (sqrt_c * x.time() + 1.0);
  return PoincarePoint(std::move(out), x.curvature());
}

}  // namespace hyperpp
