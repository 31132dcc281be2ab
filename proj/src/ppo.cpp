#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "hyperpp/softmax.hpp"
#include "hyperpp/train.hpp"
#include "train_common.hpp"

namespace hyperpp {

EncoderConfig ppo_encoder(EncoderConfig enc, const EnvSpec& spec, const PPOConfig& cfg) {
  enc.input_dim = spec.obs_dim;
  enc.actor_outputs = spec.num_actions;
  enc.critic_outputs = cfg.value_loss == ValueLossKind::HlGauss ? cfg.hl_gauss.num_bins : 1;
  return enc;
}

std::vector<int> greedy_rollout(Env& env, const std::function<Vector(const Vector&)>& scores, double* ret) {
  std::vector<int> actions;
  double total = 0.0;
  Vector obs = env.reset(0);
  for (int t = 0; t < env.spec().max_episode_steps; ++t) {
    const int a = argmax_lowest(scores(obs));
    actions.push_back(a);
    auto res = env.step(a);
    total += res.reward;
    if (res.done) break;
    obs = res.obs;
  }
  if (ret) *ret = total;
  return actions;
}

TrainResult train_ppo(const PPOConfig& cfg, const EncoderConfig& enc_in, const EnvConfig& env_cfg,
                      std::uint64_t seed, const TrainOutputs& out, const TrainHooks& hooks) {
  cfg.validate();
  const auto proto = make_env(env_cfg);
  const EnvSpec& spec = proto->spec();
  const EncoderConfig enc = ppo_encoder(enc_in, spec, cfg);
  enc.validate();

  const int E = cfg.num_envs;
  const int T = cfg.rollout_length;
  const Eigen::Index batch_n = static_cast<Eigen::Index>(E) * T;
  const std::int64_t num_updates = std::max<std::int64_t>(1, cfg.total_steps / batch_n);

  TrainResult result;
  result.encoder = enc;
  ParamStore params = init_params(enc, mix_seed(seed, 1));
  AdamState adam = AdamState::init(params.size(), cfg.adam);
  RewardNormalizer reward_norm(E, cfg.gamma);
  Rng shuffle_rng(mix_seed(seed, 2));

  std::vector<std::unique_ptr<Env>> envs;
  std::vector<std::uint64_t> episode_count(static_cast<std::size_t>(E), 0);
  std::vector<std::uint64_t> action_counter(static_cast<std::size_t>(E), 0);
  std::vector<double> episode_return(static_cast<std::size_t>(E), 0.0);
  Matrix obs(E, spec.obs_dim);
  for (int e = 0; e < E; ++e) {
    envs.push_back(proto->clone());
    obs.row(e) = envs.back()->reset(mix_seed(seed, 1000 + static_cast<std::uint64_t>(e))).transpose();
  }

  MetricsWriter writer;
  if (!out.metrics_csv.empty()) writer = MetricsWriter(out.metrics_csv);

  detail::ProbeTracker probes;
  RolloutBuffer buf = RolloutBuffer::make(E, T, spec.obs_dim);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(batch_n));
  Vector lp(spec.num_actions);
  std::int64_t env_steps = 0;
  double last_mean_return = 0.0;

  for (std::int64_t update = 0; update < num_updates; ++update) {
    double return_sum = 0.0;
    long episodes = 0;
    Vector rollout_entropy(batch_n);

    try {
      for (int t = 0; t < T; ++t) {
        const auto f = forward(enc, params, obs);
        probes.add(f.probes);
        const Vector values = critic_values(f.critic, cfg.value_loss, cfg.hl_gauss);
        const Vector ent = policy_entropies(f.actor);
        for (int e = 0; e < E; ++e) {
          const auto i = buf.index(t, e);
          const auto ue = static_cast<std::size_t>(e);
          const int a = sample_categorical(f.actor.row(e).transpose(),
                                           counter_uniform(seed, static_cast<std::uint64_t>(e), action_counter[ue]++));
          log_softmax(f.actor.row(e).transpose(), lp);
          buf.obs.row(i) = obs.row(e);
          buf.actions[static_cast<std::size_t>(i)] = a;
          buf.log_probs_old[i] = lp[a];
          buf.values[i] = values[e];
          rollout_entropy[i] = ent[e];

          auto res = envs[ue]->step(a);
          ++env_steps;
          episode_return[ue] += res.reward;
          buf.rewards[i] = cfg.normalize_rewards ? reward_norm.normalize(e, res.reward, res.done) : res.reward;
          buf.dones[static_cast<std::size_t>(i)] = res.done;
          if (res.done) {
            return_sum += episode_return[ue];
            ++episodes;
            episode_return[ue] = 0.0;
            obs.row(e) = envs[ue]->reset(mix_seed(seed, 1000 + E * ++episode_count[ue] + e)).transpose();
          } else {
            obs.row(e) = res.obs.transpose();
          }
        }
      }
      const auto fb = forward(enc, params, obs);
      const Vector boot = critic_values(fb.critic, cfg.value_loss, cfg.hl_gauss);
      compute_gae(buf, cfg, std::span<const double>(boot.data(), static_cast<std::size_t>(E)));

      MetricsRow row;
      double clip_sum = 0.0, kl_sum = 0.0, pl_sum = 0.0, vl_sum = 0.0, fc_sum = 0.0, actor_sum = 0.0;
      int mb_count = 0;
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      for (int epoch = 0; epoch < cfg.epochs_per_rollout; ++epoch) {
        for (Eigen::Index k = batch_n - 1; k > 0; --k) {
          const auto j = std::uniform_int_distribution<Eigen::Index>(0, k)(shuffle_rng);
          std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(j)]);
        }
        int mb = 0;
        for (Eigen::Index start = 0; start < batch_n; start += cfg.minibatch_size, ++mb) {
          const Eigen::Index len = std::min<Eigen::Index>(cfg.minibatch_size, batch_n - start);
          const std::span<const Eigen::Index> rows(order.data() + start, static_cast<std::size_t>(len));
          const PpoBatch batch = gather_batch(buf, rows);
          Matrix mb_obs(len, spec.obs_dim);
          for (Eigen::Index r = 0; r < len; ++r) mb_obs.row(r) = buf.obs.row(rows[static_cast<std::size_t>(r)]);

          auto f = forward(enc, params, mb_obs);
          const PpoLoss loss = ppo_loss(batch, f.actor, f.critic, cfg);
          backward(enc, f.tape, loss.d_actor, loss.d_critic, params);
          const double fc = detail::fc_grad_norm(params);
          const double ag = detail::actor_grad_norm(params);
          const StepStats st = adam_step(params, adam, cfg.max_grad_norm);

          clip_sum += loss.clip_fraction;
          kl_sum += loss.update_kl;
          pl_sum += loss.policy_loss;
          vl_sum += loss.value_loss;
          fc_sum += fc;
          actor_sum += ag;
          ++mb_count;
          if (hooks.on_minibatch) {
            hooks.on_minibatch({static_cast<int>(update), epoch, mb, loss.clip_fraction, loss.update_kl,
                                loss.policy_loss, loss.value_loss, st.grad_norm});
          }
        }
      }

      const double inv = 1.0 / mb_count;
      if (episodes > 0) last_mean_return = return_sum / static_cast<double>(episodes);
      row.step = env_steps;
      row.mean_return = last_mean_return;
      row.entropy = rollout_entropy.mean();
      row.entropy_variance = (rollout_entropy.array() - row.entropy).square().mean();
      row.update_kl = kl_sum * inv;
      row.clip_fraction = clip_sum * inv;
      row.mean_conformal_factor = probes.window_mean_conformal();
      row.max_embedding_norm = probes.window_max_norm;
      row.fc_grad_norm = fc_sum * inv;
      row.actor_grad_norm = actor_sum * inv;
      row.value_loss = vl_sum * inv;
      row.policy_loss = pl_sum * inv;
      probes.reset_window();
      result.rows.push_back(row);
      if (writer.is_open()) writer.append(row);
      if (hooks.on_row) hooks.on_row(row);
    } catch (const TrainingFault& f) {
      detail::rethrow_at_step(f, env_steps);
    }
  }

  result.env_steps = env_steps;
  result.final_mean_return = last_mean_return;
  probes.finish(result);
  auto eval_env = proto->clone();
  result.greedy_actions = greedy_rollout(
      *eval_env,
      [&](const Vector& o) -> Vector { return forward(enc, params, o.transpose()).actor.row(0).transpose(); },
      &result.greedy_return);

  if (!out.checkpoint.empty()) {
    Checkpoint ck;
    ck.config_hash = out.config_hash;
    ck.params = params;
    detail::adam_aux(ck, adam);
    ck.aux.emplace_back("reward_norm", reward_norm.state());
    save_checkpoint(out.checkpoint, ck);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace hyperpp
