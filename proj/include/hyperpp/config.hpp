#pragma once

// Run configuration: one INI file fully determines a training run.
//
//   [run]      algorithm, name, out_dir, seeds
//   [encoder]  geometry, rmsnorm, learned_scaling, alpha, c, hidden_dims, ...
//   [value]    loss, num_bins, v_min, v_max, sigma_ratio
//   [ppo]      PPO hyperparameters and budget
//   [ddqn]     DDQN hyperparameters and budget
//   [env]      name, depth, branching, seed, chain_length

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hyperpp/envs.hpp"
#include "hyperpp/rl.hpp"

namespace hyperpp {

enum class Algorithm { Ppo, Ddqn };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm a) noexcept;

struct RunConfig {
  Algorithm algorithm = Algorithm::Ppo;
  std::string run_name = "hyperpp";
  std::string out_dir = "runs";
  std::vector<std::uint64_t> seeds{0, 1, 2};

  EncoderConfig encoder;
  ValueLossKind value_loss = ValueLossKind::HlGauss;
  HlGaussConfig hl_gauss;
  PPOConfig ppo;
  DQNConfig ddqn;
  EnvConfig env;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// Algorithm configs with the [value] settings folded in.
  PPOConfig effective_ppo() const;
  DQNConfig effective_ddqn() const;
};

/// Unknown sections or keys, malformed values and failed validation all throw
/// ConfigError with a "section.key" message. Missing keys keep their defaults.
RunConfig parse_config_string(std::string_view text, const std::string& source = "<string>");
RunConfig parse_config_file(const std::string& path);

/// Every field, with floats in shortest round-trip form; parsing the result
/// gives back an identical config.
std::string serialize_config(const RunConfig& cfg);

/// FNV-1a of the serialized config.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace hyperpp
