#pragma once

// End-to-end PPO and DDQN training loops on the toy environments.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hyperpp/envs.hpp"
#include "hyperpp/metrics.hpp"
#include "hyperpp/rl.hpp"

namespace hyperpp {

struct TrainOutputs {
  std::string metrics_csv;  // empty: do not write
  std::string checkpoint;   // empty: do not write
  std::uint64_t config_hash = 0;
};

struct MinibatchStats {
  int update = 0;
  int epoch = 0;
  int minibatch = 0;
  double clip_fraction = 0.0;
  double update_kl = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double grad_norm = 0.0;  // global norm before clipping
};

struct TrainHooks {
  std::function<void(const MinibatchStats&)> on_minibatch;
  std::function<void(const MetricsRow&)> on_row;
};

struct TrainResult {
  std::vector<MetricsRow> rows;
  std::int64_t env_steps = 0;
  double final_mean_return = 0.0;
  std::vector<int> greedy_actions;  // argmax rollout from a fresh episode
  double greedy_return = 0.0;
  /// Extremes over every forward pass of the run.
  double max_conformal_factor = 0.0;
  double max_embedding_norm = 0.0;
  double max_minkowski_residual = 0.0;
  double conformal_factor_bound = 0.0;
  EncoderConfig encoder;  // with input/output sizes filled in
  ParamStore params;
};

/// Sizes the encoder for the environment and value loss: input_dim, actor
/// outputs and critic outputs are overwritten.
EncoderConfig ppo_encoder(EncoderConfig enc, const EnvSpec& spec, const PPOConfig& cfg);
EncoderConfig ddqn_encoder(EncoderConfig enc, const EnvSpec& spec, const DQNConfig& cfg);

/// Throws TrainingFault whose where() names the environment step and layer.
TrainResult train_ppo(const PPOConfig& cfg, const EncoderConfig& enc, const EnvConfig& env_cfg, std::uint64_t seed,
                      const TrainOutputs& out = {}, const TrainHooks& hooks = {});
TrainResult train_ddqn(const DQNConfig& cfg, const EncoderConfig& enc, const EnvConfig& env_cfg, std::uint64_t seed,
                       const TrainOutputs& out = {}, const TrainHooks& hooks = {});

/// Follows argmax actions (lowest index on ties) from reset until the episode
/// ends. For DDQN heads pass the Q decoding through `scores`.
std::vector<int> greedy_rollout(Env& env, const std::function<Vector(const Vector&)>& scores, double* ret);

}  // namespace hyperpp
