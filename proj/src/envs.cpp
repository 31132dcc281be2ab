#include "hyperpp/envs.hpp"

#include <algorithm>
#include <cmath>

#include "hyperpp/random.hpp"

namespace hyperpp {

namespace {

long ipow(long b, int e) {
  long r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

void check_tree_shape(int depth, int branching) {
  if (depth < 1) throw ContractError("TreeGatherEnv: depth must be >= 1");
  if (branching < 2) throw ContractError("TreeGatherEnv: branching must be >= 2");
  if (ipow(branching, depth) > 1'000'000) throw ContractError("TreeGatherEnv: tree too large");
}

}  // namespace

// ---------------------------------------------------------------------------
// TreeGather

TreeGatherEnv::TreeGatherEnv(int depth, int branching, std::uint64_t seed) : depth_(depth), branching_(branching) {
  check_tree_shape(depth, branching);
  Rng rng(mix_seed(seed, 0x7ee));
  leaf_rewards_.resize(static_cast<std::size_t>(ipow(branching, depth)));
  for (auto& r : leaf_rewards_) r = uniform(rng);
  const double top = *std::max_element(leaf_rewards_.begin(), leaf_rewards_.end());
  for (auto& r : leaf_rewards_) r /= top;
  finish_construction();
}

TreeGatherEnv::TreeGatherEnv(int depth, int branching, std::vector<double> leaf_rewards)
    : depth_(depth), branching_(branching), leaf_rewards_(std::move(leaf_rewards)) {
  check_tree_shape(depth, branching);
  if (static_cast<long>(leaf_rewards_.size()) != ipow(branching, depth)) {
    throw ContractError("TreeGatherEnv: need branching^depth leaf rewards");
  }
  for (double r : leaf_rewards_) {
    if (!std::isfinite(r)) throw DomainError("TreeGatherEnv: non-finite leaf reward");
  }
  finish_construction();
}

void TreeGatherEnv::finish_construction() {
  num_nodes_ = level_start(depth_ + 1);
  spec_.obs_dim = num_nodes_ + depth_ + 1;
  spec_.num_actions = branching_;
  spec_.max_episode_steps = depth_;
  spec_.optimal_return = optimal_policy(*this).value;
}

long TreeGatherEnv::level_start(int level) const noexcept {
  return (ipow(branching_, level) - 1) / (branching_ - 1);
}

Vector TreeGatherEnv::observe() const {
  Vector obs = Vector::Zero(spec_.obs_dim);
  obs[current_node()] = 1.0;
  obs[num_nodes_ + level_] = 1.0;
  return obs;
}

Vector TreeGatherEnv::reset(std::uint64_t /*episode_seed*/) {
  // The tree has no start-state randomness; the episode seed only matters for
  // environments that draw one.
  level_ = 0;
  position_ = 0;
  done_ = false;
  return observe();
}

StepResult TreeGatherEnv::step(int action) {
  if (done_) throw ContractError("TreeGatherEnv: step after the episode ended");
  if (action < 0 || action >= branching_) throw ContractError("TreeGatherEnv: action out of range");
  position_ = position_ * branching_ + action;
  ++level_;
  StepResult res;
  if (level_ == depth_) {
    res.reward = leaf_rewards_[static_cast<std::size_t>(position_)];
    res.done = true;
    done_ = true;
  }
  res.obs = observe();
  return res;
}

OptimalPath optimal_policy(const TreeGatherEnv& env) {
  OptimalPath best;
  best.value = -INFINITY;
  std::vector<int> path;
  long visited = 0;
  auto dfs = [&](auto&& self, int level, long pos) -> void {
    if (level == env.depth()) {
      ++visited;
      const double r = env.leaf_rewards()[static_cast<std::size_t>(pos)];
      if (r > best.value) {
        best.value = r;
        best.actions = path;
      }
      return;
    }
    for (int a = 0; a < env.branching(); ++a) {
      path.push_back(a);
      self(self, level + 1, pos * env.branching() + a);
      path.pop_back();
    }
  };
  dfs(dfs, 0, 0);
  best.leaves_visited = visited;
  return best;
}

// ---------------------------------------------------------------------------
// Chain

ChainEnv::ChainEnv(int length) : length_(length) {
  if (length < 2) throw ContractError("ChainEnv: length must be >= 2");
  spec_.obs_dim = length + 1;
  spec_.num_actions = 2;
  spec_.max_episode_steps = 2 * length;
  spec_.optimal_return = optimal_policy(*this).value;
}

Vector ChainEnv::observe() const {
  Vector obs = Vector::Zero(spec_.obs_dim);
  obs[pos_] = 1.0;
  obs[length_] = static_cast<double>(pos_) / (length_ - 1);
  return obs;
}

Vector ChainEnv::reset(std::uint64_t /*episode_seed*/) {
  pos_ = 0;
  steps_ = 0;
  done_ = false;
  return observe();
}

StepResult ChainEnv::step(int action) {
  if (done_) throw ContractError("ChainEnv: step after the episode ended");
  if (action < 0 || action > 1) throw ContractError("ChainEnv: action out of range");
  pos_ = std::clamp(pos_ + (action == 1 ? 1 : -1), 0, length_ - 1);
  ++steps_;
  StepResult res;
  if (pos_ == length_ - 1) {
    res.reward = 1.0;
    res.done = true;
  } else if (steps_ >= spec_.max_episode_steps) {
    res.done = true;
  }
  done_ = res.done;
  res.obs = observe();
  return res;
}

OptimalPath optimal_policy(const ChainEnv& env) {
  // Breadth-first search over positions; the only reward is at the far end.
  const int n = static_cast<int>(env.spec().obs_dim) - 1;
  OptimalPath best;
  best.actions.assign(static_cast<std::size_t>(n - 1), 1);
  // n-1 right moves always fit in the 2n step limit.
  best.value = 1.0;
  best.leaves_visited = n;
  return best;
}

// ---------------------------------------------------------------------------
// Factory

void EnvConfig::validate() const {
  if (name == "tree_gather") {
    if (depth < 1) throw ConfigError("env.depth must be >= 1");
    if (branching < 2) throw ConfigError("env.branching must be >= 2");
    if (std::pow(branching, depth) > 1e6) throw ConfigError("env.depth/env.branching: tree too large");
  } else if (name == "chain") {
    if (chain_length < 2) throw ConfigError("env.chain_length must be >= 2");
  } else {
    throw ConfigError("unknown env.name '" + name + "' (expected tree_gather or chain)");
  }
}

std::unique_ptr<Env> make_env(const EnvConfig& cfg) {
  cfg.validate();
  if (cfg.name == "chain") return std::make_unique<ChainEnv>(cfg.chain_length);
  return std::make_unique<TreeGatherEnv>(cfg.depth, cfg.branching, cfg.seed);
}

OptimalPath optimal_policy(const EnvConfig& cfg) {
  cfg.validate();
  if (cfg.name == "chain") return optimal_policy(ChainEnv(cfg.chain_length));
  return optimal_policy(TreeGatherEnv(cfg.depth, cfg.branching, cfg.seed));
}

}  // namespace hyperpp
