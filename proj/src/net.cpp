#include "hyperpp/net.hpp"

#include <cmath>
#include <limits>

#include "hyperpp/mlr.hpp"
#include "hyperpp/random.hpp"

namespace hyperpp {

Geometry parse_geometry(std::string_view name) {
  if (name == "euclidean") return Geometry::Euclidean;
  if (name == "poincare") return Geometry::Poincare;
  if (name == "hyperboloid") return Geometry::Hyperboloid;
  throw ConfigError("unknown geometry '" + std::string(name) +
                    "' (expected euclidean, poincare or hyperboloid)");
}

std::string_view to_string(Geometry g) noexcept {
  switch (g) {
    case Geometry::Euclidean: return "euclidean";
    case Geometry::Poincare: return "poincare";
    case Geometry::Hyperboloid: return "hyperboloid";
  }
  return "?";
}

void EncoderConfig::validate() const {
  if (input_dim < 1) throw ContractError("EncoderConfig: input_dim must be >= 1");
  for (auto h : hidden_dims) {
    if (h < 1) throw ContractError("EncoderConfig: hidden sizes must be >= 1");
  }
  if (latent_dim < 2) throw ContractError("EncoderConfig: latent_dim must be >= 2");
  if (actor_outputs < 1) throw ContractError("EncoderConfig: actor_outputs must be >= 1");
  if (critic_outputs < 0) throw ContractError("EncoderConfig: critic_outputs must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ContractError("EncoderConfig: alpha must lie in (0, 1)");
  Curvature{c};
}

// ---------------------------------------------------------------------------
// ParamStore

int ParamStore::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (find(name) >= 0) throw ContractError("ParamStore: duplicate slice '" + name + "'");
  if (rows < 1 || cols < 1) throw ContractError("ParamStore: empty slice '" + name + "'");
  const Eigen::Index offset = values.size();
  layout_.push_back({std::move(name), offset, rows, cols});
  values.conservativeResize(offset + rows * cols);
  grads.conservativeResize(offset + rows * cols);
  values.tail(rows * cols).setZero();
  grads.tail(rows * cols).setZero();
  return static_cast<int>(layout_.size()) - 1;
}

int ParamStore::find(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (layout_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

MatrixMap ParamStore::value(int id) {
  const auto& s = slice(id);
  return MatrixMap(values.data() + s.offset, s.rows, s.cols);
}
ConstMatrixMap ParamStore::value(int id) const {
  const auto& s = slice(id);
  return ConstMatrixMap(values.data() + s.offset, s.rows, s.cols);
}
MatrixMap ParamStore::grad(int id) {
  const auto& s = slice(id);
  return MatrixMap(grads.data() + s.offset, s.rows, s.cols);
}
ConstMatrixMap ParamStore::grad(int id) const {
  const auto& s = slice(id);
  return ConstMatrixMap(grads.data() + s.offset, s.rows, s.cols);
}
double ParamStore::grad_norm(int id) const { return grad(id).norm(); }

std::vector<std::string> dense_layer_names(const EncoderConfig& cfg) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < cfg.hidden_dims.size(); ++i) names.push_back("dense" + std::to_string(i));
  names.push_back("fc");
  return names;
}

namespace {

void init_uniform(MatrixMap m, Rng& rng, double bound) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -bound, bound);
}

void add_dense(ParamStore& p, Rng& rng, const std::string& name, Eigen::Index in, Eigen::Index out) {
  const int w = p.add(name + ".w", out, in);
  const int b = p.add(name + ".b", 1, out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  init_uniform(p.value(w), rng, bound);
  init_uniform(p.value(b), rng, bound);
}

void add_head(ParamStore& p, Rng& rng, const EncoderConfig& cfg, const std::string& name,
              Eigen::Index classes) {
  if (cfg.geometry == Geometry::Euclidean) {
    add_dense(p, rng, name, cfg.latent_dim, classes);
    return;
  }
  const int z = p.add(name + ".z", classes, cfg.latent_dim);
  p.add(name + ".r", 1, classes);
  init_uniform(p.value(z), rng, 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim)));
}

}  // namespace

ParamStore init_params(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(mix_seed(seed, 0x5eed));
  ParamStore p;
  const auto names = dense_layer_names(cfg);
  Eigen::Index in = cfg.input_dim;
  for (std::size_t i = 0; i < cfg.hidden_dims.size(); ++i) {
    add_dense(p, rng, names[i], in, cfg.hidden_dims[i]);
    in = cfg.hidden_dims[i];
  }
  add_dense(p, rng, "fc", in, cfg.latent_dim);
  if (cfg.use_learned_scaling) p.add("scale.xi", 1, 1);
  add_head(p, rng, cfg, "actor", cfg.actor_outputs);
  if (cfg.critic_outputs > 0) add_head(p, rng, cfg, "critic", cfg.critic_outputs);
  return p;
}

// ---------------------------------------------------------------------------
// Forward

namespace {

int need(const ParamStore& p, const std::string& name) {
  const int id = p.find(name);
  if (id < 0) throw ContractError("parameter store has no slice '" + name + "'");
  return id;
}

TapeNode make_node(OpKind kind, std::string name, int input = -1, int param0 = -1, int param1 = -1) {
  TapeNode n;
  n.kind = kind;
  n.name = std::move(name);
  n.input = input;
  n.param0 = param0;
  n.param1 = param1;
  return n;
}

class Builder {
 public:
  Builder(Tape& tape, const ParamStore& params) : tape_(tape), params_(params) {}

  int push(TapeNode node) {
    if (!node.value.allFinite()) throw TrainingFault(node.name, "non-finite forward values");
    tape_.nodes.push_back(std::move(node));
    return static_cast<int>(tape_.nodes.size()) - 1;
  }

  const Matrix& value(int id) const { return tape_.nodes[static_cast<std::size_t>(id)].value; }

  int dense(int in, const std::string& name) {
    TapeNode n = make_node(OpKind::Dense, name, in, need(params_, name + ".w"), need(params_, name + ".b"));
    const auto w = params_.value(n.param0);
    const auto b = params_.value(n.param1);
    if (w.cols() != value(in).cols()) throw ContractError(name + ": input width mismatch");
    n.value.noalias() = value(in) * w.transpose();
    n.value.rowwise() += b.row(0);
    return push(std::move(n));
  }

  int activation(int in, Activation act, const std::string& name) {
    TapeNode n = make_node(OpKind::Activation, name, in);
    n.activation = act;
    n.value = value(in).unaryExpr([act](double x) { return activate(act, x); });
    return push(std::move(n));
  }

  int rmsnorm(int in, const std::string& name) {
    TapeNode n = make_node(OpKind::RmsNorm, name, in);
    n.scalar = RmsNormConfig{}.epsilon;
    const Matrix& x = value(in);
    const double d = static_cast<double>(x.cols());
    n.value.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      n.value.row(i) = x.row(i) / std::sqrt(n.scalar + x.row(i).squaredNorm() / d);
    }
    return push(std::move(n));
  }

  int scale(int in, double s, const std::string& name) {
    TapeNode n = make_node(OpKind::Scale, name, in);
    n.scalar = s;
    n.value = s * value(in);
    return push(std::move(n));
  }

  int learned_scale(int in, double rho_max, const std::string& name) {
    TapeNode n = make_node(OpKind::LearnedScale, name, in, need(params_, "scale.xi"));
    n.scalar = rho_max;
    n.value = (rho_max * sigmoid(params_.value(n.param0)(0, 0))) * value(in);
    return push(std::move(n));
  }

  int exp0(int in, Geometry g, double sqrt_c, const std::string& name) {
    const Matrix& v = value(in);
    const auto d = v.cols();
    TapeNode n = make_node(g == Geometry::Poincare ? OpKind::PoincareExp0 : OpKind::HyperboloidExp0, name, in);
    n.scalar = sqrt_c;
    if (g == Geometry::Poincare) {
      n.value.resize(v.rows(), d);
      for (Eigen::Index i = 0; i < v.rows(); ++i) detail::poincare_exp0_raw(&v(i, 0), d, sqrt_c, &n.value(i, 0));
    } else {
      n.value.resize(v.rows(), d + 1);
      for (Eigen::Index i = 0; i < v.rows(); ++i) detail::hyperboloid_exp0_raw(&v(i, 0), d, sqrt_c, &n.value(i, 0));
    }
    return push(std::move(n));
  }

  int mlr(int in, Geometry g, double sqrt_c, const std::string& name) {
    TapeNode n = make_node(g == Geometry::Poincare ? OpKind::PoincareMlr : OpKind::HyperboloidMlr, name, in,
               need(params_, name + ".z"), need(params_, name + ".r"));
    n.scalar = sqrt_c;
    const Matrix z = params_.value(n.param0);
    const auto r = params_.value(n.param1);
    const std::span<const double> rs(r.data(), static_cast<std::size_t>(r.size()));
    const Matrix& x = value(in);
    const auto d = z.cols();
    n.value.resize(x.rows(), z.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (g == Geometry::Poincare) {
        detail::poincare_mlr_forward(z, rs, sqrt_c, &x(i, 0), d, &n.value(i, 0));
      } else {
        detail::hyperboloid_mlr_forward(z, rs, sqrt_c, &x(i, 0), d, &n.value(i, 0));
      }
    }
    return push(std::move(n));
  }

 private:
  Tape& tape_;
  const ParamStore& params_;
};

Probes compute_probes(const EncoderConfig& cfg, const Tape& tape, const ParamStore& params) {
  Probes p;
  const Matrix& v = tape.nodes[static_cast<std::size_t>(tape.tangent)].value;
  const auto n = v.rows();
  if (n == 0) return p;
  const Curvature c(cfg.c);
  double radius_bound = std::numeric_limits<double>::infinity();
  if (cfg.use_rmsnorm) {
    radius_bound = prop1_norm_bound(cfg.activation, cfg.latent_dim);
    if (cfg.use_learned_scaling) {
      ScalingParams sp{params.value(params.find("scale.xi"))(0, 0), cfg.alpha, c};
      radius_bound *= sp.factor();
    }
  }
  p.conformal_factor_bound = cfg.geometry == Geometry::Euclidean ? 1.0 : conformal_bound_for_radius(radius_bound, c);
  double sum_norm = 0.0;
  double sum_lambda = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = v.row(i).norm();
    sum_norm += norm;
    p.max_embedding_norm = std::max(p.max_embedding_norm, norm);
    double lambda = 1.0;
    if (cfg.geometry == Geometry::Poincare) {
      const auto& x = tape.nodes[static_cast<std::size_t>(tape.manifold)].value;
      lambda = 2.0 / (1.0 - c.value() * x.row(i).squaredNorm());
    } else if (cfg.geometry == Geometry::Hyperboloid) {
      const auto& x = tape.nodes[static_cast<std::size_t>(tape.manifold)].value;
      const double x0 = x(i, 0);
      // Conformal factor of the isometric Poincare point: 1 + sqrt(c) x0.
      lambda = 1.0 + c.sqrt() * x0;
      p.max_time_component = std::max(p.max_time_component, x0);
      const double resid = std::abs(x.row(i).tail(x.cols() - 1).squaredNorm() - x0 * x0 + 1.0 / c.value());
      p.max_minkowski_residual = std::max(p.max_minkowski_residual, resid);
    }
    sum_lambda += lambda;
    p.max_conformal_factor = std::max(p.max_conformal_factor, lambda);
  }
  p.mean_embedding_norm = sum_norm / static_cast<double>(n);
  p.mean_conformal_factor = sum_lambda / static_cast<double>(n);
  return p;
}

}  // namespace

ForwardOutput forward(const EncoderConfig& cfg, const ParamStore& params, const Matrix& obs) {
  cfg.validate();
  if (obs.cols() != cfg.input_dim) throw ContractError("forward: observation width mismatch");
  ForwardOutput out;
  Tape& t = out.tape;
  Builder b(t, params);
  const double sqrt_c = Curvature(cfg.c).sqrt();

  TapeNode input = make_node(OpKind::Input, "input");
  input.value = obs;
  int cur = b.push(std::move(input));
  const auto names = dense_layer_names(cfg);
  for (std::size_t i = 0; i + 1 < names.size(); ++i) {
    cur = b.dense(cur, names[i]);
    cur = b.activation(cur, cfg.hidden_activation, names[i] + ".act");
  }
  cur = b.dense(cur, "fc");
  t.last_dense = cur;
  if (cfg.use_rmsnorm) {
    cur = b.rmsnorm(cur, "rmsnorm");
    cur = b.activation(cur, cfg.activation, "rmsnorm.act");
    cur = b.scale(cur, 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim)), "rmsnorm.scale");
  }
  if (cfg.use_learned_scaling) {
    cur = b.learned_scale(cur, ScalingParams{0.0, cfg.alpha, Curvature(cfg.c)}.rho_max(), "scale");
  }
  t.tangent = cur;
  if (cfg.geometry != Geometry::Euclidean) {
    cur = b.exp0(cur, cfg.geometry, sqrt_c, "exp0");
    t.manifold = cur;
    t.actor = b.mlr(cur, cfg.geometry, sqrt_c, "actor");
    if (cfg.critic_outputs > 0) t.critic = b.mlr(cur, cfg.geometry, sqrt_c, "critic");
  } else {
    t.actor = b.dense(cur, "actor");
    if (cfg.critic_outputs > 0) t.critic = b.dense(cur, "critic");
  }
  out.actor = t.nodes[static_cast<std::size_t>(t.actor)].value;
  if (t.critic >= 0) out.critic = t.nodes[static_cast<std::size_t>(t.critic)].value;
  out.probes = compute_probes(cfg, t, params);
  return out;
}

// ---------------------------------------------------------------------------
// Backward

void backward(const EncoderConfig& cfg, Tape& tape, const Matrix& d_actor, const Matrix& d_critic,
              ParamStore& params) {
  if (tape.nodes.empty() || tape.actor < 0) throw ContractError("backward: no forward pass on this tape");
  for (auto& n : tape.nodes) n.grad.setZero(n.value.rows(), n.value.cols());
  auto& actor = tape.nodes[static_cast<std::size_t>(tape.actor)];
  if (d_actor.rows() != actor.value.rows() || d_actor.cols() != actor.value.cols()) {
    throw ContractError("backward: actor gradient shape mismatch");
  }
  actor.grad = d_actor;
  if (d_critic.size() > 0) {
    if (tape.critic < 0) throw ContractError("backward: network has no critic");
    auto& critic = tape.nodes[static_cast<std::size_t>(tape.critic)];
    if (d_critic.rows() != critic.value.rows() || d_critic.cols() != critic.value.cols()) {
      throw ContractError("backward: critic gradient shape mismatch");
    }
    critic.grad = d_critic;
  }
  const RmsNormConfig rms;

  for (auto i = static_cast<int>(tape.nodes.size()) - 1; i > 0; --i) {
    TapeNode& node = tape.nodes[static_cast<std::size_t>(i)];
    TapeNode& in = tape.nodes[static_cast<std::size_t>(node.input)];
    const Matrix& g = node.grad;
    const Matrix& x = in.value;
    const bool need_input_grad = node.input > 0;
    switch (node.kind) {
      case OpKind::Input:
        break;
      case OpKind::Dense: {
        auto w = params.value(node.param0);
        params.grad(node.param0).noalias() += g.transpose() * x;
        params.grad(node.param1).row(0) += g.colwise().sum();
        if (need_input_grad) in.grad.noalias() += g * w;
        break;
      }
      case OpKind::Activation: {
        const Activation act = node.activation;
        in.grad.array() += g.array() * x.unaryExpr([act](double v) { return activate_grad(act, v); }).array();
        break;
      }
      case OpKind::RmsNorm: {
        const double d = static_cast<double>(x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          const double mu = std::sqrt(rms.epsilon + x.row(r).squaredNorm() / d);
          in.grad.row(r) += g.row(r) / mu - x.row(r) * (x.row(r).dot(g.row(r)) / (d * mu * mu * mu));
        }
        break;
      }
      case OpKind::Scale:
        in.grad += node.scalar * g;
        break;
      case OpKind::LearnedScale: {
        const double s = sigmoid(params.value(node.param0)(0, 0));
        in.grad += (node.scalar * s) * g;
        params.grad(node.param0)(0, 0) += node.scalar * s * (1.0 - s) * (g.array() * x.array()).sum();
        break;
      }
      case OpKind::PoincareExp0:
      case OpKind::HyperboloidExp0: {
        const auto d = x.cols();
        Vector tmp(d);
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          if (node.kind == OpKind::PoincareExp0) {
            detail::poincare_exp0_vjp(&x(r, 0), &g(r, 0), d, node.scalar, tmp.data());
          } else {
            detail::hyperboloid_exp0_vjp(&x(r, 0), &g(r, 0), d, node.scalar, tmp.data());
          }
          in.grad.row(r) += tmp.transpose();
        }
        break;
      }
      case OpKind::PoincareMlr:
      case OpKind::HyperboloidMlr: {
        const Matrix z = params.value(node.param0);
        const auto rv = params.value(node.param1);
        const std::span<const double> rs(rv.data(), static_cast<std::size_t>(rv.size()));
        Matrix gz = Matrix::Zero(z.rows(), z.cols());
        Vector gr = Vector::Zero(z.rows());
        const auto d = z.cols();
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          if (node.kind == OpKind::PoincareMlr) {
            detail::poincare_mlr_backward(z, rs, node.scalar, &x(r, 0), d, &g(r, 0), &in.grad(r, 0), &gz, gr.data());
          } else {
            detail::hyperboloid_mlr_backward(z, rs, node.scalar, &x(r, 0), d, &g(r, 0), &in.grad(r, 0), &gz,
                                             gr.data());
          }
        }
        params.grad(node.param0) += gz;
        params.grad(node.param1).row(0) += gr.transpose();
        break;
      }
    }
    if (!in.grad.allFinite()) throw TrainingFault(node.name, "non-finite gradient");
  }
  (void)cfg;
  tape.backward_done = true;
}

// ---------------------------------------------------------------------------
// Adam

AdamState AdamState::init(Eigen::Index size, const AdamConfig& cfg) {
  if (!(cfg.lr > 0.0) || !(cfg.eps > 0.0) || !(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) ||
      !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw ContractError("AdamState: invalid hyperparameters");
  }
  return {Vector::Zero(size), Vector::Zero(size), 0, cfg};
}

StepStats adam_step(ParamStore& params, AdamState& st, double max_grad_norm) {
  if (st.m.size() != params.size()) throw ContractError("adam_step: state size does not match parameters");
  if (!params.grads.allFinite()) throw TrainingFault("adam_step", "non-finite gradient");
  StepStats stats;
  stats.grad_norm = params.grads.norm();
  if (max_grad_norm > 0.0 && stats.grad_norm > max_grad_norm) {
    stats.clip_scale = max_grad_norm / stats.grad_norm;
    params.grads *= stats.clip_scale;
  }
  const auto& c = st.cfg;
  ++st.t;
  st.m = c.beta1 * st.m + (1.0 - c.beta1) * params.grads;
  st.v = c.beta2 * st.v + (1.0 - c.beta2) * params.grads.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(st.t));
  params.values.array() -= c.lr * (st.m.array() / bc1) / ((st.v.array() / bc2).sqrt() + c.eps);
  params.zero_grad();
  return stats;
}

// ---------------------------------------------------------------------------
// Diagnostics

GradientChainReport gradient_chain_report(const EncoderConfig& cfg, const Tape& tape, const ParamStore& params) {
  if (!tape.backward_done) throw ContractError("gradient_chain_report: backward has not run on this tape");
  GradientChainReport rep;
  const TapeNode& actor = tape.nodes[static_cast<std::size_t>(tape.actor)];
  rep.loss_grad_norm = actor.grad.norm();
  const int fc_w = params.find("fc.w");
  const int fc_b = params.find("fc.b");
  rep.fc_grad_norm = std::hypot(params.grad_norm(fc_w), params.grad_norm(fc_b));

  const Matrix& v = tape.nodes[static_cast<std::size_t>(tape.tangent)].value;
  const auto n = v.rows();
  if (n == 0) return rep;
  if (cfg.geometry == Geometry::Euclidean) {
    rep.mlr_input_jacobian_norm = params.value(actor.param0).norm();
    rep.exp_map_jacobian_norm = 1.0;
    rep.exp_map_radial_factor = 1.0;
    return rep;
  }
  const double sqrt_c = Curvature(cfg.c).sqrt();
  const Matrix& x = tape.nodes[static_cast<std::size_t>(tape.manifold)].value;
  const Matrix z = params.value(actor.param0);
  const auto rv = params.value(actor.param1);
  const std::span<const double> rs(rv.data(), static_cast<std::size_t>(rv.size()));
  const auto k_count = z.rows();
  const auto d = z.cols();
  Vector unit(k_count);
  Vector gx(x.cols());
  double sum_mlr = 0.0;
  double sum_exp = 0.0;
  double sum_radial = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    double fro2 = 0.0;
    for (Eigen::Index k = 0; k < k_count; ++k) {
      unit.setZero();
      unit[k] = 1.0;
      gx.setZero();
      if (cfg.geometry == Geometry::Poincare) {
        detail::poincare_mlr_backward(z, rs, sqrt_c, &x(r, 0), d, unit.data(), gx.data(), nullptr, nullptr);
      } else {
        detail::hyperboloid_mlr_backward(z, rs, sqrt_c, &x(r, 0), d, unit.data(), gx.data(), nullptr, nullptr);
      }
      fro2 += gx.squaredNorm();
    }
    sum_mlr += std::sqrt(fro2);
    // Closed-form singular values of the exp-map Jacobians: the tangential
    // directions share one value, the radial direction has its own.
    const double u = sqrt_c * v.row(r).norm();
    if (cfg.geometry == Geometry::Poincare) {
      const double t = std::tanh(u);
      sum_radial += 1.0 - t * t;
      sum_exp += detail::tanh_ratio(v.row(r).norm(), sqrt_c);
    } else {
      const double radial = std::sqrt(std::cosh(2.0 * u));
      sum_radial += radial;
      sum_exp += std::max(radial, detail::sinh_ratio(v.row(r).norm(), sqrt_c));
    }
  }
  const double dn = static_cast<double>(n);
  rep.mlr_input_jacobian_norm = sum_mlr / dn;
  rep.exp_map_jacobian_norm = sum_exp / dn;
  rep.exp_map_radial_factor = sum_radial / dn;
  return rep;
}

}  // namespace hyperpp
