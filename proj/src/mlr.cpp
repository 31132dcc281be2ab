#include "hyperpp/mlr.hpp"

#include <cmath>
#include <numbers>

#include "hyperpp/random.hpp"

namespace hyperpp {

namespace {

double floored_norm(const auto& z) { return std::sqrt(z.squaredNorm() + kNormFloor * kNormFloor); }

void check_head(const MlrHead& head, MlrModel expected, Eigen::Index d, const char* op) {
  if (head.model != expected) throw ContractError(std::string(op) + ": head model mismatch");
  if (head.dim() != d) throw ContractError(std::string(op) + ": dimension mismatch");
  if (head.r.size() != head.num_classes()) throw ContractError(std::string(op) + ": r has wrong length");
}

void check_curvature(const MlrHead& head, Curvature c, const char* op) {
  if (!(head.c == c)) throw ContractError(std::string(op) + ": point curvature differs from head");
}

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

double stable_asinh(double a) noexcept {
  const double x = std::abs(a);
  double y;
  if (x > 1e8) {
    y = std::log(x) + std::numbers::ln2;
  } else {
    y = std::log1p(x + x * x / (1.0 + std::sqrt(1.0 + x * x)));
  }
  return std::copysign(y, a);
}

MlrHead MlrHead::init(MlrModel model, Eigen::Index classes, Eigen::Index dim, Curvature c,
                      std::uint64_t seed) {
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  Matrix z(classes, dim);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = uniform(rng, -bound, bound);
  return MlrHead{model, std::move(z), Vector::Zero(classes), c};
}

namespace detail {

void poincare_mlr_forward(const Matrix& z, std::span<const double> r, double sqrt_c,
                          const double* x, Eigen::Index d, double* scores) {
  Eigen::Map<const Vector> xv(x, d);
  const double c = sqrt_c * sqrt_c;
  const double lambda = 2.0 / (1.0 - c * xv.squaredNorm());
  for (Eigen::Index k = 0; k < z.rows(); ++k) {
    const double n = floored_norm(z.row(k));
    const double dot = z.row(k).dot(xv) / n;
    const double s2 = 2.0 * sqrt_c * r[k];
    const double f = (1.0 - lambda) * std::sinh(s2) + sqrt_c * lambda * std::cosh(s2) * dot;
    scores[k] = 2.0 * n / sqrt_c * stable_asinh(f);
  }
}

void poincare_mlr_backward(const Matrix& z, std::span<const double> r, double sqrt_c,
                           const double* x, Eigen::Index d, const double* upstream,
                           double* grad_x, Matrix* grad_z, double* grad_r) {
  Eigen::Map<const Vector> xv(x, d);
  const double c = sqrt_c * sqrt_c;
  const double den = 1.0 - c * xv.squaredNorm();
  const double lambda = 2.0 / den;
  double radial = 0.0;  // coefficient of x in the accumulated input gradient
  Vector along = Vector::Zero(d);
  for (Eigen::Index k = 0; k < z.rows(); ++k) {
    const double g = upstream[k];
    if (g == 0.0) continue;
    const double n = floored_norm(z.row(k));
    const double dot = z.row(k).dot(xv) / n;
    const double s2 = 2.0 * sqrt_c * r[k];
    const double sh = std::sinh(s2);
    const double ch = std::cosh(s2);
    const double f = (1.0 - lambda) * sh + sqrt_c * lambda * ch * dot;
    const double dv_df = 2.0 * n / sqrt_c / std::sqrt(1.0 + f * f);
    if (grad_x != nullptr) {
      // grad_x F = sqrt(c) lambda ch zhat + (-sh + sqrt(c) ch dot) * 4c x / den^2
      along += (g * dv_df * sqrt_c * lambda * ch / n) * z.row(k).transpose();
      radial += g * dv_df * (-sh + sqrt_c * ch * dot) * 4.0 * c / (den * den);
    }
    if (grad_r != nullptr) {
      const double df_dr = 2.0 * sqrt_c * ((1.0 - lambda) * ch + sqrt_c * lambda * sh * dot);
      grad_r[k] += g * dv_df * df_dr;
    }
    if (grad_z != nullptr) {
      const double outer = 2.0 / sqrt_c * stable_asinh(f);
      const double inner = dv_df * sqrt_c * lambda * ch / n;
      // (x - dot zhat) restricted to row k
      grad_z->row(k) += g * ((outer / n - inner * dot / n) * z.row(k) + inner * xv.transpose());
    }
  }
  if (grad_x != nullptr) Eigen::Map<Vector>(grad_x, d) += along + radial * xv;
}

void hyperboloid_mlr_forward(const Matrix& z, std::span<const double> r, double sqrt_c,
                             const double* x, Eigen::Index d, double* scores) {
  const double x0 = x[0];
  Eigen::Map<const Vector> xs(x + 1, d);
  for (Eigen::Index k = 0; k < z.rows(); ++k) {
    const double n = floored_norm(z.row(k));
    const double dot = z.row(k).dot(xs) / n;
    const double s = sqrt_c * r[k];
    const double arg = sqrt_c * (-x0 * std::sinh(s) + std::cosh(s) * dot);
    scores[k] = n / sqrt_c * stable_asinh(arg);
  }
}

void hyperboloid_mlr_backward(const Matrix& z, std::span<const double> r, double sqrt_c,
                              const double* x, Eigen::Index d, const double* upstream,
                              double* grad_x, Matrix* grad_z, double* grad_r) {
  const double c = sqrt_c * sqrt_c;
  const double x0 = x[0];
  Eigen::Map<const Vector> xs(x + 1, d);
  double g_time = 0.0;
  Vector g_space = Vector::Zero(d);
  for (Eigen::Index k = 0; k < z.rows(); ++k) {
    const double g = upstream[k];
    if (g == 0.0) continue;
    const double n = floored_norm(z.row(k));
    const double dot = z.row(k).dot(xs) / n;
    const double s = sqrt_c * r[k];
    const double sh = std::sinh(s);
    const double ch = std::cosh(s);
    const double arg = sqrt_c * (-x0 * sh + ch * dot);
    const double dv_da = n / sqrt_c / std::sqrt(1.0 + arg * arg);
    if (grad_x != nullptr) {
      g_time += g * dv_da * (-sqrt_c * sh);
      g_space += (g * dv_da * sqrt_c * ch / n) * z.row(k).transpose();
    }
    if (grad_r != nullptr) grad_r[k] += g * dv_da * c * (-x0 * ch + sh * dot);
    if (grad_z != nullptr) {
      const double outer = stable_asinh(arg) / sqrt_c;
      const double inner = dv_da * sqrt_c * ch / n;
      grad_z->row(k) += g * ((outer / n - inner * dot / n) * z.row(k) + inner * xs.transpose());
    }
  }
  if (grad_x != nullptr) {
    grad_x[0] += g_time;
    Eigen::Map<Vector>(grad_x + 1, d) += g_space;
  }
}

}  // namespace detail

ScoreVector poincare_mlr_score(const MlrHead& head, const PoincarePoint& x) {
  check_head(head, MlrModel::PoincareHNNpp, x.dim(), "poincare_mlr_score");
  check_curvature(head, x.curvature(), "poincare_mlr_score");
  ScoreVector v(head.num_classes());
  detail::poincare_mlr_forward(head.z, as_span(head.r), head.c.sqrt(), x.coords().data(), x.dim(),
                               v.data());
  return v;
}

Matrix poincare_mlr_score_grad_x(const MlrHead& head, const PoincarePoint& x) {
  check_head(head, MlrModel::PoincareHNNpp, x.dim(), "poincare_mlr_score_grad_x");
  check_curvature(head, x.curvature(), "poincare_mlr_score_grad_x");
  const auto k_count = head.num_classes();
  Matrix out = Matrix::Zero(k_count, x.dim());
  Vector unit = Vector::Zero(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    unit.setZero();
    unit[k] = 1.0;
    detail::poincare_mlr_backward(head.z, as_span(head.r), head.c.sqrt(), x.coords().data(),
                                  x.dim(), unit.data(), out.row(k).data(), nullptr, nullptr);
  }
  return out;
}

ParamGrads poincare_mlr_score_grad_params(const MlrHead& head, const PoincarePoint& x) {
  check_head(head, MlrModel::PoincareHNNpp, x.dim(), "poincare_mlr_score_grad_params");
  check_curvature(head, x.curvature(), "poincare_mlr_score_grad_params");
  ParamGrads out{Matrix::Zero(head.num_classes(), head.dim()), Vector::Zero(head.num_classes())};
  // v_k depends only on (z_k, r_k), so an all-ones upstream separates per row.
  const Vector ones = Vector::Ones(head.num_classes());
  detail::poincare_mlr_backward(head.z, as_span(head.r), head.c.sqrt(), x.coords().data(), x.dim(),
                                ones.data(), nullptr, &out.z, out.r.data());
  return out;
}

ScoreVector hyperboloid_mlr_score(const MlrHead& head, const HyperboloidPoint& x) {
  check_head(head, MlrModel::Hyperboloid, x.dim(), "hyperboloid_mlr_score");
  check_curvature(head, x.curvature(), "hyperboloid_mlr_score");
  ScoreVector v(head.num_classes());
  detail::hyperboloid_mlr_forward(head.z, as_span(head.r), head.c.sqrt(), x.coords().data(),
                                  x.dim(), v.data());
  return v;
}

HyperboloidMlrGrads hyperboloid_mlr_score_grad(const MlrHead& head, const HyperboloidPoint& x) {
  check_head(head, MlrModel::Hyperboloid, x.dim(), "hyperboloid_mlr_score_grad");
  check_curvature(head, x.curvature(), "hyperboloid_mlr_score_grad");
  const auto k_count = head.num_classes();
  HyperboloidMlrGrads out{Matrix::Zero(k_count, x.dim() + 1), Matrix::Zero(k_count, head.dim()),
                          Vector::Zero(k_count)};
  Vector unit = Vector::Zero(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    unit.setZero();
    unit[k] = 1.0;
    detail::hyperboloid_mlr_backward(head.z, as_span(head.r), head.c.sqrt(), x.coords().data(),
                                     x.dim(), unit.data(), out.x.row(k).data(), nullptr, nullptr);
  }
  const Vector ones = Vector::Ones(k_count);
  detail::hyperboloid_mlr_backward(head.z, as_span(head.r), head.c.sqrt(), x.coords().data(),
                                   x.dim(), ones.data(), nullptr, &out.z, out.r.data());
  return out;
}

}  // namespace hyperpp
