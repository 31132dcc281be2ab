#include <algorithm>
#include <cmath>

#include "hyperpp/train.hpp"
#include "train_common.hpp"

namespace hyperpp {

EncoderConfig ddqn_encoder(EncoderConfig enc, const EnvSpec& spec, const DQNConfig& cfg) {
  enc.input_dim = spec.obs_dim;
  const int width = cfg.value_loss == ValueLossKind::HlGauss ? cfg.hl_gauss.num_bins : 1;
  enc.actor_outputs = static_cast<Eigen::Index>(spec.num_actions) * width;
  enc.critic_outputs = 0;
  return enc;
}

TrainResult train_ddqn(const DQNConfig& cfg, const EncoderConfig& enc_in, const EnvConfig& env_cfg,
                       std::uint64_t seed, const TrainOutputs& out, const TrainHooks& hooks) {
  cfg.validate();
  auto env = make_env(env_cfg);
  const EnvSpec spec = env->spec();
  const EncoderConfig enc = ddqn_encoder(enc_in, spec, cfg);
  enc.validate();
  const int num_actions = spec.num_actions;

  TrainResult result;
  result.encoder = enc;
  ParamStore online = init_params(enc, mix_seed(seed, 1));
  ParamStore target = online;
  AdamState adam = AdamState::init(online.size(), cfg.adam);
  ReplayBuffer replay(cfg.buffer_capacity, spec.obs_dim);
  Rng rng(mix_seed(seed, 3));

  MetricsWriter writer;
  if (!out.metrics_csv.empty()) writer = MetricsWriter(out.metrics_csv);

  auto q_of = [&](const ParamStore& p, const Matrix& x, Probes* pr) {
    const auto f = forward(enc, p, x);
    if (pr) *pr = f.probes;
    return q_values(f.actor, num_actions, cfg.value_loss, cfg.hl_gauss);
  };

  detail::ProbeTracker probes;
  std::uint64_t episodes_started = 0;
  Vector obs = env->reset(mix_seed(seed, 1000));
  double episode_return = 0.0;
  double window_return_sum = 0.0;
  long window_episodes = 0;
  double last_mean_return = 0.0;
  double vl_sum = 0.0, fc_sum = 0.0, actor_sum = 0.0;
  long window_updates = 0;

  std::int64_t step = 0;
  try {
    for (; step < cfg.total_steps; ++step) {
      Probes pr;
      const Matrix q = q_of(online, obs.transpose(), &pr);
      probes.add(pr);
      const int a = epsilon_greedy(q.row(0).transpose(), step, cfg, rng);
      auto res = env->step(a);
      replay.push(obs, a, res.reward, res.obs, res.done);
      episode_return += res.reward;
      if (res.done) {
        window_return_sum += episode_return;
        ++window_episodes;
        episode_return = 0.0;
        obs = env->reset(mix_seed(seed, 1000 + ++episodes_started));
      } else {
        obs = res.obs;
      }

      const std::int64_t gstep = step + 1;
      const bool learning = gstep > cfg.learning_starts && replay.size() >= cfg.batch_size;
      if (learning && gstep % cfg.train_frequency == 0) {
        const auto idx = replay.sample_indices(cfg.batch_size, rng);
        const auto batch = replay.gather(idx);
        const Vector y = ddqn_target(batch, enc, online, target, cfg, num_actions);
        auto f = forward(enc, online, batch.obs);
        const LossAndGrad td = dqn_td_loss(f.actor, batch.actions, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                                           num_actions, cfg.value_loss, cfg.hl_gauss);
        backward(enc, f.tape, td.grad, Matrix(), online);
        fc_sum += detail::fc_grad_norm(online);
        actor_sum += detail::actor_grad_norm(online);
        vl_sum += td.loss;
        ++window_updates;
        const StepStats st = adam_step(online, adam, cfg.max_grad_norm);
        if (hooks.on_minibatch) {
          hooks.on_minibatch({static_cast<int>(gstep / cfg.train_frequency), 0, 0, 0.0, 0.0, 0.0, td.loss, st.grad_norm});
        }
      }
      if (learning) update_target(online, target, cfg, gstep);

      if (gstep % cfg.log_interval == 0 || gstep == cfg.total_steps) {
        if (window_episodes > 0) last_mean_return = window_return_sum / static_cast<double>(window_episodes);
        MetricsRow row;
        row.step = gstep;
        row.mean_return = last_mean_return;
        row.mean_conformal_factor = probes.window_mean_conformal();
        row.max_embedding_norm = probes.window_max_norm;
        if (window_updates > 0) {
          const double inv = 1.0 / static_cast<double>(window_updates);
          row.fc_grad_norm = fc_sum * inv;
          row.actor_grad_norm = actor_sum * inv;
          row.value_loss = vl_sum * inv;
        }
        probes.reset_window();
        window_return_sum = 0.0;
        window_episodes = 0;
        vl_sum = fc_sum = actor_sum = 0.0;
        window_updates = 0;
        result.rows.push_back(row);
        if (writer.is_open()) writer.append(row);
        if (hooks.on_row) hooks.on_row(row);
      }
    }
  } catch (const TrainingFault& f) {
    detail::rethrow_at_step(f, step + 1);
  }

  result.env_steps = step;
  result.final_mean_return = last_mean_return;
  probes.finish(result);
  auto eval_env = env->clone();
  result.greedy_actions = greedy_rollout(
      *eval_env, [&](const Vector& o) -> Vector { return q_of(online, o.transpose(), nullptr).row(0).transpose(); },
      &result.greedy_return);

  if (!out.checkpoint.empty()) {
    Checkpoint ck;
    ck.config_hash = out.config_hash;
    ck.params = online;
    detail::adam_aux(ck, adam);
    ck.aux.emplace_back("target", target.values);
    save_checkpoint(out.checkpoint, ck);
  }
  result.params = std::move(online);
  return result;
}

}  // namespace hyperpp
