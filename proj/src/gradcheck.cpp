#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>

#include "hyperpp/checks.hpp"
#include "hyperpp/errors.hpp"
#include "hyperpp/mlr.hpp"
#include "hyperpp/net.hpp"
#include "hyperpp/random.hpp"
#include "hyperpp/regularization.hpp"
#include "hyperpp/value_loss.hpp"

namespace hyperpp {
namespace {

constexpr double kStep = 1e-6;
// Analytic derivatives of a corrupted suite are scaled by this factor.
constexpr double kCorruption = 1.001;

Vector normal(Rng& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

Matrix normal(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  const Vector v = normal(rng, rows * cols, scale);
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix central_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x) {
  const Vector f0 = f(x);
  Matrix jac(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = kStep * (1.0 + std::abs(x[j]));
    Vector xp = x;
    Vector xm = x;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return jac;
}

template <typename A, typename B>
double relative_error(const A& analytic, const B& reference) {
  const double scale = std::max({analytic.norm(), reference.norm(), 1e-8});
  return (analytic - reference).norm() / scale;
}

Curvature pick_curvature(int draw) {
  static constexpr double kC[] = {0.5, 1.0, 2.0};
  return Curvature(kC[draw % 3]);
}

// Tangent vector whose image stays away from the ball boundary, so the
// finite differences are not dominated by the saturated tanh.
Vector tangent(Rng& rng, Eigen::Index d, Curvature c) {
  const Vector dir = normal(rng, d).normalized();
  return dir * (uniform(rng, 0.05, 2.0) / c.sqrt());
}

using Suite = std::function<double(Rng&, int draw, double corrupt)>;

double poincare_exp0_suite(Rng& rng, int draw, double corrupt) {
  const Curvature c = pick_curvature(draw);
  const Eigen::Index d = 2 + draw % 15;
  const Vector v = tangent(rng, d, c);
  const Matrix analytic = corrupt * poincare_exp0_jacobian(TangentVector::poincare(v, c));
  const Matrix fd = central_jacobian(
      [&](const Vector& u) { return Vector(poincare_exp0(TangentVector::poincare(u, c)).coords()); }, v);
  return relative_error(analytic, fd);
}

double hyperboloid_exp0_suite(Rng& rng, int draw, double corrupt) {
  const Curvature c = pick_curvature(draw);
  const Eigen::Index d = 2 + draw % 15;
  const Vector v = tangent(rng, d, c);
  const Matrix full = hyperboloid_exp0_jacobian(TangentVector::hyperboloid_from_euclidean(v, c));
  const Matrix analytic = corrupt * full.rightCols(d);
  const Matrix fd = central_jacobian(
      [&](const Vector& u) {
        return Vector(hyperboloid_exp0(TangentVector::hyperboloid_from_euclidean(u, c)).coords());
      },
      v);
  // The time column must be exactly zero: tangent vectors at the origin have
  // no time component.
  const double time_col = full.col(0).norm();
  return std::max(relative_error(analytic, fd), time_col);
}

MlrHead random_head(Rng& rng, MlrModel model, Eigen::Index k, Eigen::Index d, Curvature c) {
  MlrHead head = MlrHead::init(model, k, d, c, rng());
  head.r = normal(rng, k, 0.4);
  return head;
}

// Flattens (z, r) so parameter FD can reuse central_jacobian.
Vector pack(const MlrHead& h) {
  Vector out(h.z.size() + h.r.size());
  out.head(h.z.size()) = Eigen::Map<const Vector>(h.z.data(), h.z.size());
  out.tail(h.r.size()) = h.r;
  return out;
}

MlrHead unpack(const MlrHead& like, const Vector& p) {
  MlrHead h = like;
  Eigen::Map<Vector>(h.z.data(), h.z.size()) = p.head(h.z.size());
  h.r = p.tail(h.r.size());
  return h;
}

// Dense K x (K*d + K) Jacobian from per-class parameter gradients.
Matrix param_jacobian(const Matrix& gz, const Vector& gr, Eigen::Index d) {
  const Eigen::Index k = gz.rows();
  Matrix jac = Matrix::Zero(k, k * d + k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) jac(i, i * d + j) = gz(i, j);
    jac(i, k * d + i) = gr[i];
  }
  return jac;
}

double poincare_mlr_suite(Rng& rng, int draw, double corrupt) {
  const Curvature c = pick_curvature(draw);
  const Eigen::Index d = 2 + draw % 9;
  const Eigen::Index k = 1 + draw % 6;
  const MlrHead head = random_head(rng, MlrModel::PoincareHNNpp, k, d, c);
  const PoincarePoint x = poincare_exp0(TangentVector::poincare(tangent(rng, d, c), c));

  const Matrix gx = corrupt * poincare_mlr_score_grad_x(head, x);
  const Matrix fx = central_jacobian(
      [&](const Vector& y) { return Vector(poincare_mlr_score(head, PoincarePoint(y, c))); }, x.coords());

  const ParamGrads gp = poincare_mlr_score_grad_params(head, x);
  const Matrix ap = param_jacobian(gp.z, gp.r, d);
  const Matrix fp =
      central_jacobian([&](const Vector& p) { return Vector(poincare_mlr_score(unpack(head, p), x)); }, pack(head));
  return std::max(relative_error(gx, fx), relative_error(ap, fp));
}

double hyperboloid_mlr_suite(Rng& rng, int draw, double corrupt) {
  const Curvature c = pick_curvature(draw);
  const Eigen::Index d = 2 + draw % 9;
  const Eigen::Index k = 1 + draw % 6;
  const MlrHead head = random_head(rng, MlrModel::Hyperboloid, k, d, c);
  const HyperboloidPoint x = hyperboloid_exp0(TangentVector::hyperboloid_from_euclidean(tangent(rng, d, c), c));

  const HyperboloidMlrGrads g = hyperboloid_mlr_score_grad(head, x);
  // Ambient derivative: the score formula is differentiated with x0 and the
  // space coordinates treated as independent.
  const std::span<const double> r(head.r.data(), static_cast<std::size_t>(k));
  const Matrix fx = central_jacobian(
      [&](const Vector& y) {
        Vector v(k);
        detail::hyperboloid_mlr_forward(head.z, r, c.sqrt(), y.data(), d, v.data());
        return v;
      },
      x.coords());
  const Matrix ap = param_jacobian(g.z, g.r, d);
  const Matrix fp = central_jacobian(
      [&](const Vector& p) { return Vector(hyperboloid_mlr_score(unpack(head, p), x)); }, pack(head));
  return std::max(relative_error(Matrix(corrupt * g.x), fx), relative_error(ap, fp));
}

double rmsnorm_suite(Rng& rng, int draw, double corrupt) {
  const Eigen::Index d = 2 + draw % 63;
  const RmsNormConfig cfg;
  const Vector x = normal(rng, d, std::pow(10.0, uniform(rng, -2.0, 2.0)));
  const Matrix analytic = corrupt * rmsnorm_jacobian(x, cfg);
  const Matrix fd = central_jacobian([&](const Vector& u) { return rmsnorm(u, cfg); }, x);
  return relative_error(analytic, fd);
}

double hl_gauss_suite(Rng& rng, int draw, double corrupt) {
  const HlGaussConfig cfg;
  const Eigen::Index n = 1 + draw % 8;
  const Matrix logits = normal(rng, n, cfg.num_bins, 2.0);
  std::vector<double> targets(static_cast<std::size_t>(n));
  for (auto& t : targets) t = uniform(rng, cfg.v_min, cfg.v_max);
  const LossAndGrad lg = hl_gauss_loss(logits, targets, cfg);
  const Vector flat = Eigen::Map<const Vector>(logits.data(), logits.size());
  const Matrix fd = central_jacobian(
      [&](const Vector& u) {
        const Matrix l = Eigen::Map<const Matrix>(u.data(), n, cfg.num_bins);
        return Vector::Constant(1, hl_gauss_loss(l, targets, cfg).loss);
      },
      flat);
  const Matrix analytic = corrupt * Eigen::Map<const Matrix>(lg.grad.data(), 1, lg.grad.size());
  return relative_error(analytic, fd);
}

double network_suite(Rng& rng, int draw, double corrupt) {
  static constexpr Geometry kGeom[] = {Geometry::Euclidean, Geometry::Poincare, Geometry::Hyperboloid};
  EncoderConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden_dims = {7, 5};
  cfg.latent_dim = 4;
  cfg.geometry = kGeom[draw % 3];
  cfg.use_rmsnorm = (draw / 3) % 2 == 0;
  cfg.use_learned_scaling = (draw / 6) % 2 == 0;
  cfg.c = pick_curvature(draw / 12).value();
  cfg.actor_outputs = 3;
  cfg.critic_outputs = 5;

  ParamStore p = init_params(cfg, rng());
  for (const auto& s : p.layout()) {
    if (s.name.ends_with(".r")) p.value(p.find(s.name)) = normal(rng, 1, s.cols, 0.3);
    if (s.name == "scale.xi") p.value(p.find(s.name))(0, 0) = uniform(rng, -1.0, 1.0);
  }
  const Matrix obs = normal(rng, 4, cfg.input_dim);
  const Matrix wa = normal(rng, 4, cfg.actor_outputs);
  const Matrix wc = normal(rng, 4, cfg.critic_outputs);
  auto loss = [&](const ParamStore& q) {
    const auto f = forward(cfg, q, obs);
    return (f.actor.array() * wa.array()).sum() + (f.critic.array() * wc.array()).sum();
  };

  auto out = forward(cfg, p, obs);
  p.zero_grad();
  backward(cfg, out.tape, wa, wc, p);

  // Up to 16 coordinates per slice keeps a draw cheap while touching every
  // parameter tensor.
  std::vector<Eigen::Index> coords;
  for (const auto& s : p.layout()) {
    const Eigen::Index m = std::min<Eigen::Index>(16, s.size());
    for (Eigen::Index j = 0; j < m; ++j) {
      coords.push_back(s.offset + (s.size() <= 16 ? j
                                                  : static_cast<Eigen::Index>(
                                                        rng() % static_cast<std::uint64_t>(s.size()))));
    }
  }
  Vector analytic(static_cast<Eigen::Index>(coords.size()));
  Vector numeric(analytic.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const Eigen::Index idx = coords[i];
    const double theta = p.values[idx];
    const double h = 1e-5 * (1.0 + std::abs(theta));
    p.values[idx] = theta + h;
    const double lp = loss(p);
    p.values[idx] = theta - h;
    const double lm = loss(p);
    p.values[idx] = theta;
    analytic[static_cast<Eigen::Index>(i)] = corrupt * p.grads[idx];
    numeric[static_cast<Eigen::Index>(i)] = (lp - lm) / (2.0 * h);
  }
  return relative_error(analytic, numeric);
}

struct NamedSuite {
  const char* name;
  Suite run;
};

const std::vector<NamedSuite>& suites() {
  static const std::vector<NamedSuite> all{
      {"poincare_exp0_jacobian", poincare_exp0_suite},
      {"hyperboloid_exp0_jacobian", hyperboloid_exp0_suite},
      {"poincare_mlr_grads", poincare_mlr_suite},
      {"hyperboloid_mlr_grads", hyperboloid_mlr_suite},
      {"rmsnorm_jacobian", rmsnorm_suite},
      {"hl_gauss_loss_grads", hl_gauss_suite},
      {"network_end_to_end", network_suite},
  };
  return all;
}

}  // namespace

std::vector<std::string> gradcheck_suite_names() {
  std::vector<std::string> names;
  for (const auto& s : suites()) names.emplace_back(s.name);
  return names;
}

std::vector<SuiteResult> run_gradcheck(const GradcheckOptions& opts) {
  if (opts.draws < 1) throw ContractError("gradcheck: draws must be >= 1");
  if (!opts.corrupt_suite.empty()) {
    const auto names = gradcheck_suite_names();
    if (std::find(names.begin(), names.end(), opts.corrupt_suite) == names.end()) {
      throw ContractError("gradcheck: unknown suite '" + opts.corrupt_suite + "'");
    }
  }
  std::vector<SuiteResult> results;
  std::uint64_t index = 0;
  for (const auto& s : suites()) {
    Rng rng(mix_seed(opts.seed, index++));
    const double corrupt = opts.corrupt_suite == s.name ? kCorruption : 1.0;
    SuiteResult r;
    r.name = s.name;
    for (int i = 0; i < opts.draws; ++i) {
      const double err = s.run(rng, i, corrupt);
      // NaN counts as a failure.
      r.max_rel_err = std::isnan(err) ? err : std::max(r.max_rel_err, err);
      ++r.draws;
      if (std::isnan(err)) break;
    }
    r.passed = r.max_rel_err <= opts.tolerance;
    results.push_back(r);
  }
  return results;
}

void print_gradcheck(std::ostream& os, const std::vector<SuiteResult>& results, double tolerance) {
  os << std::left << std::setw(28) << "suite" << std::right << std::setw(7) << "draws" << std::setw(14)
     << "max_rel_err" << "  status\n";
  for (const auto& r : results) {
    os << std::left << std::setw(28) << r.name << std::right << std::setw(7) << r.draws << std::setw(14)
       << std::scientific << std::setprecision(3) << r.max_rel_err << std::defaultfloat << "  "
       << (r.passed ? "ok" : "FAIL") << '\n';
  }
  os << "tolerance " << tolerance << '\n';
}

}  // namespace hyperpp
