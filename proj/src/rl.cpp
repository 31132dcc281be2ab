#include "hyperpp/rl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyperpp/softmax.hpp"

namespace hyperpp {

ValueLossKind parse_value_loss(std::string_view name) {
  if (name == "hl_gauss") return ValueLossKind::HlGauss;
  if (name == "mse") return ValueLossKind::Mse;
  throw ConfigError("unknown value loss '" + std::string(name) + "' (expected hl_gauss or mse)");
}

std::string_view to_string(ValueLossKind k) noexcept { return k == ValueLossKind::HlGauss ? "hl_gauss" : "mse"; }

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw ConfigError(msg);
}

void validate_adam(const AdamConfig& a, const char* prefix) {
  if (!(a.lr > 0.0)) throw ConfigError(std::string(prefix) + ".lr must be > 0");
  if (!(a.beta1 >= 0.0 && a.beta1 < 1.0)) throw ConfigError(std::string(prefix) + ".beta1 must be in [0,1)");
  if (!(a.beta2 >= 0.0 && a.beta2 < 1.0)) throw ConfigError(std::string(prefix) + ".beta2 must be in [0,1)");
  if (!(a.eps > 0.0)) throw ConfigError(std::string(prefix) + ".adam_eps must be > 0");
}

void validate_hl(const HlGaussConfig& hl) {
  try {
    hl.validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("value.") + e.what());
  }
}

}  // namespace

void PPOConfig::validate() const {
  require(gamma > 0.0 && gamma < 1.0, "ppo.gamma must be in (0,1)");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "ppo.gae_lambda must be in [0,1]");
  require(clip_eps > 0.0, "ppo.clip_eps must be > 0");
  require(entropy_coef >= 0.0, "ppo.entropy_coef must be >= 0");
  require(value_coef >= 0.0, "ppo.value_coef must be >= 0");
  require(epochs_per_rollout >= 1, "ppo.epochs_per_rollout must be >= 1");
  require(num_envs >= 1, "ppo.num_envs must be >= 1");
  require(rollout_length >= 1, "ppo.rollout_length must be >= 1");
  require(minibatch_size >= 1 && minibatch_size <= num_envs * rollout_length,
          "ppo.minibatch_size must be in [1, num_envs * rollout_length]");
  require(total_steps >= 1, "ppo.total_steps must be >= 1");
  require(max_grad_norm >= 0.0, "ppo.max_grad_norm must be >= 0");
  validate_adam(adam, "ppo");
  validate_hl(hl_gauss);
}

void DQNConfig::validate() const {
  require(gamma > 0.0 && gamma < 1.0, "ddqn.gamma must be in (0,1)");
  require(eps_start >= 0.0 && eps_start <= 1.0, "ddqn.eps_start must be in [0,1]");
  require(eps_end >= 0.0 && eps_end <= 1.0, "ddqn.eps_end must be in [0,1]");
  require(exploration_fraction > 0.0 && exploration_fraction <= 1.0, "ddqn.exploration_fraction must be in (0,1]");
  require(buffer_capacity >= 1, "ddqn.buffer_capacity must be >= 1");
  require(batch_size >= 1 && batch_size <= buffer_capacity, "ddqn.batch_size must be in [1, buffer_capacity]");
  require(train_frequency >= 1, "ddqn.train_frequency must be >= 1");
  require(total_steps >= 1, "ddqn.total_steps must be >= 1");
  require(learning_starts >= 0, "ddqn.learning_starts must be >= 0");
  require(max_grad_norm >= 0.0, "ddqn.max_grad_norm must be >= 0");
  require(log_interval >= 1, "ddqn.log_interval must be >= 1");
  if (polyak_tau) {
    require(*polyak_tau >= 0.0 && *polyak_tau <= 1.0, "ddqn.polyak_tau must be in [0,1]");
    require(target_update_period == 0, "ddqn.target_update_period must be 0 when ddqn.polyak_tau is set");
  } else {
    require(target_update_period >= 1, "ddqn.target_update_period must be >= 1 (or set ddqn.polyak_tau)");
  }
  validate_adam(adam, "ddqn");
  validate_hl(hl_gauss);
}

// ---------------------------------------------------------------------------
// Rollouts and GAE

RolloutBuffer RolloutBuffer::make(int num_envs, int rollout_length, Eigen::Index obs_dim) {
  if (num_envs < 1 || rollout_length < 1 || obs_dim < 1) throw ContractError("RolloutBuffer: empty shape");
  RolloutBuffer b;
  b.num_envs = num_envs;
  b.rollout_length = rollout_length;
  const Eigen::Index n = b.size();
  b.obs = Matrix::Zero(n, obs_dim);
  b.actions.assign(static_cast<std::size_t>(n), 0);
  b.log_probs_old = Vector::Zero(n);
  b.rewards = Vector::Zero(n);
  b.dones.assign(static_cast<std::size_t>(n), 0);
  b.values = Vector::Zero(n);
  b.advantages = Vector::Zero(n);
  b.returns = Vector::Zero(n);
  return b;
}

void compute_gae(RolloutBuffer& buf, double gamma, double lambda, std::span<const double> bootstrap_values) {
  const Eigen::Index n = buf.size();
  if (static_cast<int>(bootstrap_values.size()) != buf.num_envs) {
    throw ContractError("compute_gae: need one bootstrap value per env");
  }
  if (buf.rewards.size() != n || buf.values.size() != n || static_cast<Eigen::Index>(buf.dones.size()) != n) {
    throw ContractError("compute_gae: buffer arrays do not match num_envs x rollout_length");
  }
  buf.advantages.resize(n);
  buf.returns.resize(n);
  for (int e = 0; e < buf.num_envs; ++e) {
    double next_value = bootstrap_values[static_cast<std::size_t>(e)];
    double gae = 0.0;
    for (int t = buf.rollout_length - 1; t >= 0; --t) {
      const Eigen::Index i = buf.index(t, e);
      const double mask = buf.dones[static_cast<std::size_t>(i)] ? 0.0 : 1.0;
      const double delta = buf.rewards[i] + gamma * next_value * mask - buf.values[i];
      gae = delta + gamma * lambda * mask * gae;
      buf.advantages[i] = gae;
      next_value = buf.values[i];
    }
  }
  buf.returns = buf.advantages + buf.values;
  buf.advantages_ready = true;
}

PpoBatch gather_batch(const RolloutBuffer& buf, std::span<const Eigen::Index> rows) {
  if (!buf.advantages_ready) throw ContractError("gather_batch: compute_gae has not run on this rollout");
  PpoBatch b;
  const auto n = static_cast<Eigen::Index>(rows.size());
  b.actions.resize(rows.size());
  b.log_probs_old.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index i = rows[static_cast<std::size_t>(k)];
    b.actions[static_cast<std::size_t>(k)] = buf.actions[static_cast<std::size_t>(i)];
    b.log_probs_old[k] = buf.log_probs_old[i];
    b.advantages[k] = buf.advantages[i];
    b.returns[k] = buf.returns[i];
  }
  return b;
}

// ---------------------------------------------------------------------------
// PPO loss

Vector policy_entropies(const Matrix& logits) {
  Vector h(logits.rows());
  Vector lp(logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    log_softmax(logits.row(i).transpose(), lp);
    h[i] = -(lp.array().exp() * lp.array()).sum();
  }
  return h;
}

PpoLoss ppo_loss(const PpoBatch& batch, const Matrix& policy_logits, const Matrix& value_out,
                 const PPOConfig& cfg) {
  const Eigen::Index n = policy_logits.rows();
  const Eigen::Index num_actions = policy_logits.cols();
  if (n == 0 || static_cast<Eigen::Index>(batch.actions.size()) != n || batch.log_probs_old.size() != n ||
      batch.advantages.size() != n || batch.returns.size() != n || value_out.rows() != n) {
    throw ContractError("ppo_loss: batch size mismatch");
  }

  Vector adv = batch.advantages;
  if (cfg.normalize_advantages) {
    const double mean = adv.mean();
    const double std = std::sqrt((adv.array() - mean).square().mean());
    adv = (adv.array() - mean) / (std + 1e-8);
  }

  PpoLoss out;
  out.d_actor = Matrix::Zero(n, num_actions);
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector lp(num_actions);
  Vector ent(n);
  int clipped = 0;
  double objective = 0.0;
  double kl = 0.0;

  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = batch.actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= num_actions) throw ContractError("ppo_loss: action out of range");
    log_softmax(policy_logits.row(i).transpose(), lp);
    const Vector p = lp.array().exp();
    const double log_ratio = lp[a] - batch.log_probs_old[i];
    const double ratio = std::exp(log_ratio);
    if (!std::isfinite(ratio) || !std::isfinite(log_ratio)) {
      throw TrainingFault("ppo_loss", "non-finite importance ratio at sample " + std::to_string(i));
    }
    const double surr1 = ratio * adv[i];
    const double surr2 = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv[i];
    objective += std::min(surr1, surr2);
    if (std::abs(ratio - 1.0) > cfg.clip_eps) ++clipped;
    kl += (ratio - 1.0) - log_ratio;

    const double h = -(p.array() * lp.array()).sum();
    ent[i] = h;

    // d(-J)/dlogp_a is -r A on the unclipped branch and 0 on the clipped one.
    const double dlogp = surr1 <= surr2 ? -ratio * adv[i] * inv_n : 0.0;
    auto row = out.d_actor.row(i);
    row = -dlogp * p.transpose();
    row[a] += dlogp;
    // -entropy_coef * H, with dH/dl_j = -p_j (log p_j + H).
    row += (cfg.entropy_coef * inv_n) * (p.array() * (lp.array() + h)).matrix().transpose();
  }

  out.policy_loss = -objective * inv_n;
  out.entropy = ent.mean();
  out.entropy_variance = (ent.array() - out.entropy).square().mean();
  out.clip_fraction = static_cast<double>(clipped) * inv_n;
  out.update_kl = kl * inv_n;

  const std::span<const double> targets(batch.returns.data(), static_cast<std::size_t>(n));
  LossAndGrad vl;
  if (cfg.value_loss == ValueLossKind::HlGauss) {
    vl = hl_gauss_loss(value_out, targets, cfg.hl_gauss);
  } else {
    if (value_out.cols() != 1) throw ContractError("ppo_loss: MSE critic must have one output");
    const Vector v = value_out.col(0);
    vl = mse_loss(std::span<const double>(v.data(), static_cast<std::size_t>(n)), targets);
  }
  out.value_loss = vl.loss;
  out.d_critic = cfg.value_coef * vl.grad;
  out.total = out.policy_loss - cfg.entropy_coef * out.entropy + cfg.value_coef * out.value_loss;
  return out;
}

Vector critic_values(const Matrix& value_out, ValueLossKind kind, const HlGaussConfig& hl) {
  Vector v(value_out.rows());
  if (kind == ValueLossKind::Mse) {
    if (value_out.cols() != 1) throw ContractError("critic_values: MSE critic must have one output");
    return value_out.col(0);
  }
  if (value_out.cols() != hl.num_bins) throw ContractError("critic_values: expected one logit per bin");
  for (Eigen::Index i = 0; i < value_out.rows(); ++i) {
    v[i] = hl_gauss_decode_logits(std::span<const double>(value_out.row(i).data(), static_cast<std::size_t>(value_out.cols())), hl);
  }
  return v;
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
  return static_cast<double>(mix_seed(mix_seed(seed, stream), counter) >> 11) * 0x1.0p-53;
}

int sample_categorical(const Eigen::Ref<const Vector>& logits_row, double u) {
  Vector p(logits_row.size());
  softmax(logits_row, p);
  double cum = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    cum += p[j];
    if (u < cum) return static_cast<int>(j);
  }
  // u landed in the rounding gap above the last partial sum.
  for (Eigen::Index j = p.size() - 1; j >= 0; --j) {
    if (p[j] > 0.0) return static_cast<int>(j);
  }
  return 0;
}

int argmax_lowest(const Eigen::Ref<const Vector>& v) noexcept {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < v.size(); ++j) {
    if (v[j] > v[best]) best = j;
  }
  return static_cast<int>(best);
}

// ---------------------------------------------------------------------------
// Reward normalization

RewardNormalizer::RewardNormalizer(int num_envs, double gamma) : gamma_(gamma), returns_(Vector::Zero(num_envs)) {}

double RewardNormalizer::normalize(int env, double reward, bool done) {
  double& ret = returns_[env];
  ret = ret * gamma_ + reward;
  const double delta = ret - mean_;
  const double total = count_ + 1.0;
  mean_ += delta / total;
  var_ = (var_ * count_ + delta * delta * count_ / total) / total;
  count_ = total;
  if (done) ret = 0.0;
  return reward / scale();
}

double RewardNormalizer::scale() const noexcept { return std::sqrt(var_ + 1e-8); }

Vector RewardNormalizer::state() const {
  Vector s(3 + returns_.size());
  s << count_, mean_, var_, returns_;
  return s;
}

void RewardNormalizer::load_state(const Vector& s) {
  if (s.size() < 3) throw ContractError("RewardNormalizer: state too short");
  count_ = s[0];
  mean_ = s[1];
  var_ = s[2];
  returns_ = s.tail(s.size() - 3);
}

// ---------------------------------------------------------------------------
// DDQN

ReplayBuffer::ReplayBuffer(int capacity, Eigen::Index obs_dim)
    : capacity_(capacity),
      obs_(Matrix::Zero(capacity, obs_dim)),
      next_obs_(Matrix::Zero(capacity, obs_dim)),
      actions_(static_cast<std::size_t>(capacity), 0),
      rewards_(Vector::Zero(capacity)),
      dones_(Vector::Zero(capacity)) {
  if (capacity < 1) throw ContractError("ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::push(const Vector& obs, int action, double reward, const Vector& next_obs, bool done) {
  if (obs.size() != obs_.cols() || next_obs.size() != obs_.cols()) {
    throw ContractError("ReplayBuffer: observation size mismatch");
  }
  obs_.row(cursor_) = obs.transpose();
  next_obs_.row(cursor_) = next_obs.transpose();
  actions_[static_cast<std::size_t>(cursor_)] = action;
  rewards_[cursor_] = reward;
  dones_[cursor_] = done ? 1.0 : 0.0;
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::vector<int> ReplayBuffer::sample_indices(int batch, Rng& rng) const {
  if (size_ == 0) throw ContractError("ReplayBuffer: sampling from an empty buffer");
  std::uniform_int_distribution<int> pick(0, size_ - 1);
  std::vector<int> idx(static_cast<std::size_t>(batch));
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Transition ReplayBuffer::at(int i) const {
  if (i < 0 || i >= size_) throw ContractError("ReplayBuffer: index out of range");
  return {obs_.row(i).transpose(), actions_[static_cast<std::size_t>(i)], rewards_[i], next_obs_.row(i).transpose(),
          dones_[i] != 0.0};
}

ReplayBuffer::Batch ReplayBuffer::gather(std::span<const int> idx) const {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Batch b;
  b.obs.resize(n, obs_.cols());
  b.next_obs.resize(n, obs_.cols());
  b.actions.resize(idx.size());
  b.rewards.resize(n);
  b.dones.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const int i = idx[static_cast<std::size_t>(k)];
    if (i < 0 || i >= size_) throw ContractError("ReplayBuffer: index out of range");
    b.obs.row(k) = obs_.row(i);
    b.next_obs.row(k) = next_obs_.row(i);
    b.actions[static_cast<std::size_t>(k)] = actions_[static_cast<std::size_t>(i)];
    b.rewards[k] = rewards_[i];
    b.dones[k] = dones_[i];
  }
  return b;
}

Matrix q_values(const Matrix& head_out, int num_actions, ValueLossKind kind, const HlGaussConfig& hl) {
  if (kind == ValueLossKind::Mse) {
    if (head_out.cols() != num_actions) throw ContractError("q_values: expected one column per action");
    return head_out;
  }
  const Eigen::Index bins = hl.num_bins;
  if (head_out.cols() != bins * num_actions) throw ContractError("q_values: expected num_actions * bins columns");
  Matrix q(head_out.rows(), num_actions);
  for (Eigen::Index i = 0; i < head_out.rows(); ++i) {
    for (int a = 0; a < num_actions; ++a) {
      q(i, a) = hl_gauss_decode_logits(std::span<const double>(head_out.row(i).data() + a * bins, static_cast<std::size_t>(bins)), hl);
    }
  }
  return q;
}

Vector ddqn_target(const Vector& rewards, const Vector& dones, const Matrix& q_online_next,
                   const Matrix& q_target_next, double gamma) {
  const Eigen::Index n = rewards.size();
  if (dones.size() != n || q_online_next.rows() != n || q_target_next.rows() != n ||
      q_online_next.cols() != q_target_next.cols()) {
    throw ContractError("ddqn_target: shape mismatch");
  }
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = argmax_lowest(q_online_next.row(i).transpose());
    y[i] = rewards[i] + gamma * (1.0 - dones[i]) * q_target_next(i, a);
  }
  return y;
}

Vector ddqn_target(const ReplayBuffer::Batch& batch, const EncoderConfig& enc, const ParamStore& online,
                   const ParamStore& target, const DQNConfig& cfg, int num_actions) {
  if (!online.same_layout(target)) throw ContractError("ddqn_target: online and target layouts differ");
  const Matrix q_on = q_values(forward(enc, online, batch.next_obs).actor, num_actions, cfg.value_loss, cfg.hl_gauss);
  const Matrix q_tar = q_values(forward(enc, target, batch.next_obs).actor, num_actions, cfg.value_loss, cfg.hl_gauss);
  return ddqn_target(batch.rewards, batch.dones, q_on, q_tar, cfg.gamma);
}

LossAndGrad dqn_td_loss(const Matrix& head_out, std::span<const int> actions, std::span<const double> targets,
                        int num_actions, ValueLossKind kind, const HlGaussConfig& hl) {
  const Eigen::Index n = head_out.rows();
  if (static_cast<Eigen::Index>(actions.size()) != n || static_cast<Eigen::Index>(targets.size()) != n || n == 0) {
    throw ContractError("dqn_td_loss: batch size mismatch");
  }
  const Eigen::Index width = kind == ValueLossKind::Mse ? 1 : hl.num_bins;
  if (head_out.cols() != width * num_actions) throw ContractError("dqn_td_loss: head width mismatch");
  LossAndGrad out;
  out.grad = Matrix::Zero(n, head_out.cols());
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector lp(width);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= num_actions) throw ContractError("dqn_td_loss: action out of range");
    const double y = targets[static_cast<std::size_t>(i)];
    if (kind == ValueLossKind::Mse) {
      const double diff = head_out(i, a) - y;
      out.loss += diff * diff * inv_n;
      out.grad(i, a) = 2.0 * diff * inv_n;
    } else {
      const auto seg = head_out.row(i).segment(a * width, width);
      log_softmax(seg.transpose(), lp);
      const Vector q = hl_gauss_encode(y, hl).probs;
      out.loss -= q.dot(lp) * inv_n;
      out.grad.row(i).segment(a * width, width) = ((lp.array().exp() - q.array()) * inv_n).matrix().transpose();
    }
  }
  return out;
}

void polyak_update(const ParamStore& online, ParamStore& target, double tau) {
  if (!online.same_layout(target)) throw ContractError("polyak_update: layouts differ");
  if (tau == 1.0) {
    target.values = online.values;
  } else if (tau != 0.0) {
    target.values = tau * online.values + (1.0 - tau) * target.values;
  }
}

bool update_target(const ParamStore& online, ParamStore& target, const DQNConfig& cfg, std::int64_t step) {
  if (cfg.polyak_tau) {
    if (step % cfg.train_frequency != 0) return false;
    polyak_update(online, target, *cfg.polyak_tau);
    return true;
  }
  if (step % cfg.target_update_period != 0) return false;
  polyak_update(online, target, 1.0);
  return true;
}

double epsilon_at(std::int64_t step, const DQNConfig& cfg) {
  if (step < 0) throw ContractError("epsilon_at: negative step");
  const double duration = cfg.exploration_fraction * static_cast<double>(cfg.total_steps);
  if (static_cast<double>(step) >= duration) return cfg.eps_end;
  const double slope = (cfg.eps_end - cfg.eps_start) / duration;
  return cfg.eps_start + slope * static_cast<double>(step);
}

int epsilon_greedy(const Eigen::Ref<const Vector>& q, std::int64_t step, const DQNConfig& cfg, Rng& rng) {
  const double eps = epsilon_at(step, cfg);
  if (uniform(rng) < eps) {
    return std::uniform_int_distribution<int>(0, static_cast<int>(q.size()) - 1)(rng);
  }
  return argmax_lowest(q);
}

}  // namespace hyperpp
