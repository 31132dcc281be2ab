#pragma once

// Helpers shared by the PPO and DDQN trainers.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hyperpp/checkpoint.hpp"
#include "hyperpp/train.hpp"

namespace hyperpp::detail {

inline double slices_grad_norm(const ParamStore& p, std::initializer_list<const char*> names) {
  double sq = 0.0;
  for (const char* n : names) {
    const int id = p.find(n);
    if (id >= 0) {
      const double g = p.grad_norm(id);
      sq += g * g;
    }
  }
  return std::sqrt(sq);
}

inline double fc_grad_norm(const ParamStore& p) { return slices_grad_norm(p, {"fc.w", "fc.b"}); }
inline double actor_grad_norm(const ParamStore& p) {
  return slices_grad_norm(p, {"actor.z", "actor.r", "actor.w", "actor.b"});
}

/// Embedding statistics over a logging window and over the whole run.
struct ProbeTracker {
  double window_conformal_sum = 0.0;
  long window_count = 0;
  double window_max_norm = 0.0;
  double run_max_conformal = 0.0;
  double run_max_norm = 0.0;
  double run_max_residual = 0.0;
  double bound = 0.0;

  void add(const Probes& p) {
    window_conformal_sum += p.mean_conformal_factor;
    ++window_count;
    window_max_norm = std::max(window_max_norm, p.max_embedding_norm);
    run_max_conformal = std::max(run_max_conformal, p.max_conformal_factor);
    run_max_norm = std::max(run_max_norm, p.max_embedding_norm);
    run_max_residual = std::max(run_max_residual, p.max_minkowski_residual);
    bound = p.conformal_factor_bound;
  }

  double window_mean_conformal() const {
    return window_count ? window_conformal_sum / static_cast<double>(window_count) : 0.0;
  }

  void reset_window() {
    window_conformal_sum = 0.0;
    window_count = 0;
    window_max_norm = 0.0;
  }

  void finish(TrainResult& r) const {
    r.max_conformal_factor = run_max_conformal;
    r.max_embedding_norm = run_max_norm;
    r.max_minkowski_residual = run_max_residual;
    r.conformal_factor_bound = bound;
  }
};

/// Rethrows a fault with the environment step prepended to its location.
[[noreturn]] inline void rethrow_at_step(const TrainingFault& f, std::int64_t step) {
  throw TrainingFault("step " + std::to_string(step) + "/" + f.where(), f.what());
}

inline void adam_aux(Checkpoint& ck, const AdamState& st) {
  ck.aux.emplace_back("adam.m", st.m);
  ck.aux.emplace_back("adam.v", st.v);
  ck.aux.emplace_back("adam.t", Vector::Constant(1, static_cast<double>(st.t)));
}

}  // namespace hyperpp::detail
