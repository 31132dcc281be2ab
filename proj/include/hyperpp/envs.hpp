#pragma once

// Deterministic toy environments with tree-structured state spaces.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hyperpp/manifold.hpp"

namespace hyperpp {

struct EnvSpec {
  Eigen::Index obs_dim = 0;
  int num_actions = 0;
  int max_episode_steps = 0;
  double optimal_return = 0.0;  // computed by exhaustive search
};

struct StepResult {
  Vector obs;
  double reward = 0.0;
  bool done = false;
};

class Env {
 public:
  virtual ~Env() = default;

  virtual const EnvSpec& spec() const noexcept = 0;
  virtual Vector reset(std::uint64_t episode_seed) = 0;
  /// Throws ContractError after the episode ended or for an invalid action.
  virtual StepResult step(int action) = 0;
  virtual std::unique_ptr<Env> clone() const = 0;
};

struct OptimalPath {
  std::vector<int> actions;
  double value = 0.0;
  long leaves_visited = 0;
};

/// Complete b-ary tree of depth D. The agent starts at the root and picks a
/// child per step; the episode ends at a leaf with that leaf's reward.
/// Observation: one-hot node index (level order) followed by a one-hot depth
/// indicator of length D+1.
class TreeGatherEnv final : public Env {
 public:
  /// Leaf rewards drawn i.i.d. U[0,1] from the seed, then divided by their
  /// maximum so the best leaf pays exactly 1.
  TreeGatherEnv(int depth = 4, int branching = 3, std::uint64_t seed = 0);
  /// Explicit leaf rewards in left-to-right order (b^D entries).
  TreeGatherEnv(int depth, int branching, std::vector<double> leaf_rewards);

  const EnvSpec& spec() const noexcept override { return spec_; }
  Vector reset(std::uint64_t episode_seed) override;
  StepResult step(int action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<TreeGatherEnv>(*this); }

  int depth() const noexcept { return depth_; }
  int branching() const noexcept { return branching_; }
  long num_nodes() const noexcept { return num_nodes_; }
  const std::vector<double>& leaf_rewards() const noexcept { return leaf_rewards_; }
  /// Level-order index of the current node.
  long current_node() const noexcept { return level_start(level_) + position_; }
  /// Level-order index of the node at (level, position).
  long level_start(int level) const noexcept;

 private:
  Vector observe() const;
  void finish_construction();

  int depth_;
  int branching_;
  long num_nodes_ = 0;
  std::vector<double> leaf_rewards_;
  EnvSpec spec_;
  int level_ = 0;
  long position_ = 0;
  bool done_ = true;
};

OptimalPath optimal_policy(const TreeGatherEnv& env);

/// Corridor of `length` cells, start in cell 0, actions {0: left, 1: right};
/// reaching the last cell pays 1 and ends the episode. Episodes are cut at
/// 2*length steps. Observation: one-hot cell followed by the normalized
/// position.
class ChainEnv final : public Env {
 public:
  explicit ChainEnv(int length = 20);

  const EnvSpec& spec() const noexcept override { return spec_; }
  Vector reset(std::uint64_t episode_seed) override;
  StepResult step(int action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<ChainEnv>(*this); }

  int position() const noexcept { return pos_; }

 private:
  Vector observe() const;

  int length_;
  EnvSpec spec_;
  int pos_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

OptimalPath optimal_policy(const ChainEnv& env);

struct EnvConfig {
  std::string name = "tree_gather";
  int depth = 4;
  int branching = 3;
  std::uint64_t seed = 0;
  int chain_length = 20;

  void validate() const;
};

std::unique_ptr<Env> make_env(const EnvConfig& cfg);
/// Exhaustive-search optimum for the configured environment.
OptimalPath optimal_policy(const EnvConfig& cfg);

}  // namespace hyperpp
