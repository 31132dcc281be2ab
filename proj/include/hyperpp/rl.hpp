#pragma once

// PPO and DDQN building blocks: rollout/replay storage, GAE, the clipped
// surrogate loss, double-Q targets, target-network updates, exploration and
// reward normalization.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hyperpp/net.hpp"
#include "hyperpp/random.hpp"
#include "hyperpp/value_loss.hpp"

namespace hyperpp {

enum class ValueLossKind { HlGauss, Mse };

ValueLossKind parse_value_loss(std::string_view name);
std::string_view to_string(ValueLossKind k) noexcept;

struct PPOConfig {
  double gamma = 0.999;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int epochs_per_rollout = 3;
  int minibatch_size = 256;
  int rollout_length = 128;
  int num_envs = 8;
  bool normalize_rewards = true;
  bool normalize_advantages = true;
  std::int64_t total_steps = 200'000;
  double max_grad_norm = 0.5;
  AdamConfig adam{5e-4, 0.9, 0.999, 1e-5};
  ValueLossKind value_loss = ValueLossKind::HlGauss;
  HlGaussConfig hl_gauss;

  /// Throws ConfigError naming the field.
  void validate() const;
};

/// Flat storage over num_envs x rollout_length; sample (t, e) lives at row
/// t * num_envs + e. dones[i] marks that the episode ended with that step.
struct RolloutBuffer {
  int num_envs = 0;
  int rollout_length = 0;
  Matrix obs;
  std::vector<int> actions;
  Vector log_probs_old;
  Vector rewards;
  std::vector<std::uint8_t> dones;
  Vector values;
  Vector advantages;
  Vector returns;
  bool advantages_ready = false;

  static RolloutBuffer make(int num_envs, int rollout_length, Eigen::Index obs_dim);
  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(num_envs) * rollout_length; }
  Eigen::Index index(int t, int e) const noexcept { return static_cast<Eigen::Index>(t) * num_envs + e; }
};

/// Backward GAE recursion with episode-boundary masking. Fills advantages
/// and returns = advantages + values. bootstrap_values holds V(s_T) per env.
void compute_gae(RolloutBuffer& buf, double gamma, double lambda, std::span<const double> bootstrap_values);
inline void compute_gae(RolloutBuffer& buf, const PPOConfig& cfg, std::span<const double> bootstrap_values) {
  compute_gae(buf, cfg.gamma, cfg.gae_lambda, bootstrap_values);
}

struct PpoBatch {
  std::vector<int> actions;
  Vector log_probs_old;
  Vector advantages;
  Vector returns;  // value targets
};

PpoBatch gather_batch(const RolloutBuffer& buf, std::span<const Eigen::Index> rows);

struct PpoLoss {
  double total = 0.0;
  double policy_loss = 0.0;  // -J_clip
  double value_loss = 0.0;   // before value_coef
  double entropy = 0.0;      // batch mean
  double entropy_variance = 0.0;
  double clip_fraction = 0.0;
  double update_kl = 0.0;
  Matrix d_actor;   // dtotal/dlogits
  Matrix d_critic;  // dtotal/dcritic outputs
};

/// Clipped surrogate, entropy bonus and value loss for one minibatch. Value
/// outputs are HL-Gauss logits (N x bins) or scalar values (N x 1). Advantages
/// are standardized within the batch when cfg.normalize_advantages is set.
/// Throws TrainingFault("ppo_loss") on non-finite ratios.
PpoLoss ppo_loss(const PpoBatch& batch, const Matrix& policy_logits, const Matrix& value_out,
                 const PPOConfig& cfg);

/// State values from critic outputs (decoded histogram mean or the scalar).
Vector critic_values(const Matrix& value_out, ValueLossKind kind, const HlGaussConfig& hl);

/// Entropy of each row of softmax(logits).
Vector policy_entropies(const Matrix& logits);

/// Uniform double in [0,1) from a counter-based stream: same (seed, stream,
/// counter) always gives the same draw.
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept;

/// Inverse-CDF draw from softmax(logits_row) with a given uniform.
int sample_categorical(const Eigen::Ref<const Vector>& logits_row, double u);

/// Lowest index among the maxima.
int argmax_lowest(const Eigen::Ref<const Vector>& v) noexcept;

/// Running std of per-env discounted returns; rewards are divided by it
/// without mean subtraction. Returns reset at episode ends.
class RewardNormalizer {
 public:
  RewardNormalizer() = default;
  RewardNormalizer(int num_envs, double gamma);

  /// Updates the statistics with this reward and returns the scaled reward.
  double normalize(int env, double reward, bool done);
  double scale() const noexcept;

  /// Flat state (count, mean, m2, per-env returns) for checkpoints.
  Vector state() const;
  void load_state(const Vector& s);

 private:
  double gamma_ = 0.99;
  double count_ = 1e-4;
  double mean_ = 0.0;
  double var_ = 1.0;
  Vector returns_;
};

// ---------------------------------------------------------------------------
// DDQN

struct DQNConfig {
  double gamma = 0.99;
  double eps_start = 1.0;
  double eps_end = 0.01;
  double exploration_fraction = 0.1;
  int buffer_capacity = 50'000;
  /// Hard copy period in environment steps; must be 0 when polyak_tau is set.
  int target_update_period = 1000;
  std::optional<double> polyak_tau;
  int batch_size = 32;
  int train_frequency = 4;
  std::int64_t total_steps = 150'000;
  /// First step at which updates may start (the buffer also has to hold a batch).
  std::int64_t learning_starts = 1000;
  double max_grad_norm = 10.0;
  int log_interval = 1000;
  AdamConfig adam{1e-4, 0.9, 0.999, 2.5e-5};
  ValueLossKind value_loss = ValueLossKind::HlGauss;
  HlGaussConfig hl_gauss;

  void validate() const;
};

struct Transition {
  Vector obs;
  int action = 0;
  double reward = 0.0;
  Vector next_obs;
  bool done = false;
};

class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, Eigen::Index obs_dim);

  void push(const Vector& obs, int action, double reward, const Vector& next_obs, bool done);
  int size() const noexcept { return size_; }
  int capacity() const noexcept { return capacity_; }
  int cursor() const noexcept { return cursor_; }

  /// Uniform with replacement over the filled region.
  std::vector<int> sample_indices(int batch, Rng& rng) const;
  Transition at(int i) const;

  struct Batch {
    Matrix obs;
    std::vector<int> actions;
    Vector rewards;
    Matrix next_obs;
    Vector dones;
  };
  Batch gather(std::span<const int> idx) const;

 private:
  int capacity_;
  int size_ = 0;
  int cursor_ = 0;
  Matrix obs_;
  Matrix next_obs_;
  std::vector<int> actions_;
  Vector rewards_;
  Vector dones_;
};

/// Q(s, .) from Q-head outputs: per-action decoded histograms (HL-Gauss,
/// num_actions * bins columns) or the raw columns (MSE).
Matrix q_values(const Matrix& head_out, int num_actions, ValueLossKind kind, const HlGaussConfig& hl);

/// y = r + gamma (1 - done) Q_target(s', argmax_a Q_online(s', a)).
Vector ddqn_target(const Vector& rewards, const Vector& dones, const Matrix& q_online_next,
                   const Matrix& q_target_next, double gamma);

/// Net-level form: evaluates both networks on next_obs.
Vector ddqn_target(const ReplayBuffer::Batch& batch, const EncoderConfig& enc, const ParamStore& online,
                   const ParamStore& target, const DQNConfig& cfg, int num_actions);

/// TD loss on the taken actions; the gradient is zero outside them.
LossAndGrad dqn_td_loss(const Matrix& head_out, std::span<const int> actions, std::span<const double> targets,
                        int num_actions, ValueLossKind kind, const HlGaussConfig& hl);

/// target <- tau * online + (1 - tau) * target.
void polyak_update(const ParamStore& online, ParamStore& target, double tau);

/// Call once per environment step. Hard mode copies when step is a multiple
/// of the period; Polyak mode averages on training steps. Returns whether the
/// target changed.
bool update_target(const ParamStore& online, ParamStore& target, const DQNConfig& cfg, std::int64_t step);

/// Linear anneal from eps_start to eps_end over exploration_fraction * total_steps.
double epsilon_at(std::int64_t step, const DQNConfig& cfg);

/// Uniform action with probability epsilon_at(step), else argmax (lowest
/// index on ties). Always consumes one draw, plus one more when exploring.
int epsilon_greedy(const Eigen::Ref<const Vector>& q, std::int64_t step, const DQNConfig& cfg, Rng& rng);

}  // namespace hyperpp
