// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
//
//   acceptance [criterion ...]   run a subset, e.g. `acceptance 1 2 5`

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hyperpp/checks.hpp"
#include "hyperpp/config.hpp"
#include "hyperpp/mlr.hpp"
#include "hyperpp/regularization.hpp"
#include "hyperpp/train.hpp"
#include "hyperpp/value_loss.hpp"

#ifndef HYPERPP_SOURCE_DIR
#define HYPERPP_SOURCE_DIR "."
#endif

using namespace hyperpp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string path_string(const std::vector<int>& a) {
  std::string s;
  for (int x : a) s += std::to_string(x);
  return s;
}

Vector normal(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// ------------------------------------------------------------ training jobs

struct Job {
  std::string name;
  RunConfig cfg;
  std::uint64_t seed = 0;
  fs::path csv;
  TrainResult result;
  double seconds = 0.0;
  std::string error;
};

void run_job(Job& j) {
  const auto t0 = Clock::now();
  try {
    fs::create_directories(j.csv.parent_path());
    const TrainOutputs out{j.csv.string(), "", config_hash(j.cfg)};
    j.result = j.cfg.algorithm == Algorithm::Ppo
                   ? train_ppo(j.cfg.effective_ppo(), j.cfg.encoder, j.cfg.env, j.seed, out)
                   : train_ddqn(j.cfg.effective_ddqn(), j.cfg.encoder, j.cfg.env, j.seed, out);
  } catch (const std::exception& e) {
    j.error = e.what();
  }
  j.seconds = seconds_since(t0);
  std::fprintf(stderr, "  [%s] %.1f s%s%s\n", j.name.c_str(), j.seconds, j.error.empty() ? "" : " error: ",
               j.error.c_str());
}

// Independent jobs; one worker per hardware thread.
void run_all(std::vector<Job*>& jobs) {
  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                           static_cast<unsigned>(jobs.size())));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(*jobs[i]);
    });
  }
  for (auto& t : pool) t.join();
}

class Runs {
 public:
  explicit Runs(fs::path root) : root_(std::move(root)) {}

  Job& add(const std::string& name, const RunConfig& cfg, std::uint64_t seed) {
    auto [it, fresh] = jobs_.try_emplace(name);
    if (fresh) {
      it->second.name = name;
      it->second.cfg = cfg;
      it->second.seed = seed;
      it->second.csv = root_ / name / "metrics.csv";
      pending_.push_back(&it->second);
    }
    return it->second;
  }

  void execute() {
    if (pending_.empty()) return;
    std::fprintf(stderr, "training %zu runs\n", pending_.size());
    run_all(pending_);
    pending_.clear();
  }

 private:
  fs::path root_;
  std::map<std::string, Job> jobs_;
  std::vector<Job*> pending_;
};

constexpr std::uint64_t kSeeds[] = {0, 1, 2};

RunConfig hyperpp_ppo() { return RunConfig{}; }

RunConfig unregularized_ppo() {
  RunConfig c;
  c.encoder.use_rmsnorm = false;
  c.encoder.use_learned_scaling = false;
  return c;
}

RunConfig shipped(const char* file) {
  return parse_config_file((fs::path(HYPERPP_SOURCE_DIR) / "configs" / file).string());
}

// --------------------------------------------------------------- criteria

Verdict criterion1() {
  const auto t0 = Clock::now();
  const auto results = run_gradcheck();
  const double secs = seconds_since(t0);
  std::ostringstream d;
  bool ok = results.size() >= 7 && secs < 60.0;
  double worst = 0.0;
  for (const auto& r : results) {
    ok = ok && r.passed && r.draws >= 100;
    worst = std::max(worst, r.max_rel_err);
    if (!r.passed) d << r.name << " failed; ";
  }
  d << results.size() << " suites x 100 draws, worst rel err " << std::scientific << std::setprecision(2) << worst
    << std::defaultfloat << ", " << std::setprecision(3) << secs << " s";
  return {ok, d.str()};
}

Verdict criterion2() {
  const auto rep = run_boundcheck();
  std::ostringstream d;
  d << rep.violations() << " violations over";
  long checked = 0;
  for (const auto& s : rep.sweeps) checked += s.checked;
  d << ' ' << checked << " checks; radius bound " << rep.scaled_radius_bound << " (max " << std::setprecision(9)
    << rep.max_scaled_radius << "), conformal bound " << std::setprecision(5) << rep.tanh_conformal_bound;
  const bool ok = rep.violations() == 0 && rep.max_scaled_radius <= 0.95 &&
                  std::abs(rep.scaled_radius_bound - 0.95) < 1e-15 && std::abs(rep.tanh_conformal_bound - 4.7622) < 1e-4;
  return {ok, d.str()};
}

Verdict criterion3(const std::vector<const Job*>& hyperboloid_runs) {
  std::mt19937_64 rng(303);
  double worst_trip = 0.0, worst_x0 = 0.0;
  for (double cv : {0.5, 1.0, 2.0}) {
    const Curvature c(cv);
    for (int i = 0; i < 10000; ++i) {
      const Eigen::Index d = 2 + i % 63;
      const Vector v = normal(rng, d).normalized() * (std::uniform_real_distribution<double>(0.0, 3.0)(rng) / c.sqrt());
      const PoincarePoint p = poincare_exp0(TangentVector::poincare(v, c));
      const HyperboloidPoint h = poincare_to_hyperboloid(p);
      worst_trip = std::max(worst_trip, (hyperboloid_to_poincare(h).coords() - p.coords()).norm());
      const HyperboloidPoint hh = hyperboloid_exp0(TangentVector::hyperboloid_from_euclidean(v, c));
      const Vector back = poincare_to_hyperboloid(hyperboloid_to_poincare(hh)).coords();
      worst_trip = std::max(worst_trip, (back - hh.coords()).norm() / hh.coords().norm());
      worst_x0 = std::max(worst_x0, std::abs(check_cor1_x0max(v, c) - h.time()) / std::max(1.0, h.time()));
    }
  }
  double worst_residual = 0.0;
  bool runs_ok = !hyperboloid_runs.empty();
  for (const Job* j : hyperboloid_runs) {
    runs_ok = runs_ok && j->error.empty();
    worst_residual = std::max(worst_residual, j->result.max_minkowski_residual);
  }
  std::ostringstream d;
  d << std::scientific << std::setprecision(2) << "round trip " << worst_trip << ", x0 formula " << worst_x0
    << ", training residual " << worst_residual << " over " << hyperboloid_runs.size() << " Hyper++ runs";
  return {runs_ok && worst_trip <= 1e-9 && worst_x0 <= 1e-9 && worst_residual <= 1e-9, d.str()};
}

Verdict criterion4() {
  std::mt19937_64 rng(404);
  double worst_p = 0.0, worst_h = 0.0;
  for (double cv : {0.5, 1.0, 2.0}) {
    const Curvature c(cv);
    for (int i = 0; i < 1000; ++i) {
      const Eigen::Index k = 1 + i % 7;
      const Eigen::Index d = 2 + i % 31;
      for (MlrModel model : {MlrModel::PoincareHNNpp, MlrModel::Hyperboloid}) {
        MlrHead head = MlrHead::init(model, k, d, c, rng());
        head.z = Matrix(Eigen::Map<const Matrix>(normal(rng, k * d).data(), k, d));
        head.r = normal(rng, k, 0.5);
        if (model == MlrModel::PoincareHNNpp) {
          const Vector v = poincare_mlr_score(head, PoincarePoint::origin(d, c));
          for (Eigen::Index j = 0; j < k; ++j) {
            worst_p = std::max(worst_p, std::abs(v[j] + 4.0 * head.z.row(j).norm() * head.r[j]));
          }
        } else {
          const Vector v = hyperboloid_mlr_score(head, HyperboloidPoint::origin(d, c));
          for (Eigen::Index j = 0; j < k; ++j) {
            worst_h = std::max(worst_h, std::abs(v[j] + head.z.row(j).norm() * head.r[j]));
          }
        }
      }
    }
  }
  std::ostringstream d;
  d << std::scientific << std::setprecision(2) << "poincare " << worst_p << ", hyperboloid " << worst_h;
  return {worst_p <= 1e-10 && worst_h <= 1e-10, d.str()};
}

Verdict criterion5() {
  const HlGaussConfig cfg;
  double worst_sum = 0.0, worst_decode = 0.0, worst_grad_ratio = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    const double y = -12.0 + 24.0 * i / 20000.0;
    const ValueDistribution dist = hl_gauss_encode(y, cfg);
    worst_sum = std::max(worst_sum, std::abs(dist.probs.sum() - 1.0));
    if (y >= -9.5 && y <= 9.5) worst_decode = std::max(worst_decode, std::abs(hl_gauss_decode(dist, cfg) - y));
  }
  std::mt19937_64 rng(505);
  for (int i = 0; i < 2000; ++i) {
    const Eigen::Index n = 1 + i % 64;
    const double scale = std::pow(10.0, std::uniform_real_distribution<double>(-3.0, 3.0)(rng));
    const Matrix logits = Eigen::Map<const Matrix>(normal(rng, n * cfg.num_bins, scale).data(), n, cfg.num_bins);
    std::vector<double> targets(static_cast<std::size_t>(n));
    for (auto& t : targets) t = std::uniform_real_distribution<double>(-20.0, 20.0)(rng);
    const auto lg = hl_gauss_loss(logits, targets, cfg);
    worst_grad_ratio = std::max(worst_grad_ratio, lg.grad.cwiseAbs().maxCoeff() * static_cast<double>(n));
  }
  const double half_bin = 0.5 * cfg.bin_width();
  std::ostringstream d;
  d << std::setprecision(3) << "sum err " << worst_sum << ", decode err " << worst_decode << " (half bin "
    << half_bin << "), max |grad| * N " << worst_grad_ratio;
  return {worst_sum <= 1e-12 && worst_decode <= half_bin && worst_grad_ratio <= 1.0, d.str()};
}

Verdict criterion6(const std::vector<const Job*>& runs, double optimal) {
  const double target = 0.95 * optimal;
  bool ok = runs.size() == 3;
  std::ostringstream d;
  d << std::setprecision(4) << "optimal " << optimal << ", target " << target << ";";
  for (const Job* j : runs) {
    std::int64_t reached = -1;
    for (const auto& row : j->result.rows) {
      if (row.step <= 200000 && row.mean_return >= target) {
        reached = row.step;
        break;
      }
    }
    const bool seed_ok = j->error.empty() && reached >= 0 && j->seconds <= 600.0;
    ok = ok && seed_ok;
    d << " seed " << j->seed << ": ";
    if (!j->error.empty()) {
      d << "error " << j->error;
      continue;
    }
    if (reached >= 0) {
      d << "reached at " << reached;
    } else {
      d << "not reached";
    }
    d << ", final " << j->result.final_mean_return << ", " << std::setprecision(3) << j->seconds << " s"
      << std::setprecision(4) << ";";
  }
  return {ok, d.str()};
}

double last_half_clip(const std::vector<MetricsRow>& rows) {
  const std::size_t first = rows.size() / 2;
  double s = 0.0;
  for (std::size_t i = first; i < rows.size(); ++i) s += rows[i].clip_fraction;
  return rows.size() > first ? s / static_cast<double>(rows.size() - first) : 0.0;
}

double max_logged_conformal(const std::vector<MetricsRow>& rows) {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.mean_conformal_factor);
  return m;
}

Verdict criterion7(const std::vector<const Job*>& hyper, const std::vector<const Job*>& unreg) {
  const double bound = conformal_bound_for_radius(1.0, Curvature(1.0));
  bool ok = hyper.size() == 3 && unreg.size() == 3;
  int clip_wins = 0;
  std::ostringstream d;
  d << std::setprecision(3);
  for (std::size_t i = 0; i < std::min(hyper.size(), unreg.size()); ++i) {
    const Job& h = *hyper[i];
    const Job& u = *unreg[i];
    if (!h.error.empty() || !u.error.empty()) {
      ok = false;
      d << " seed " << h.seed << ": error;";
      continue;
    }
    const double ratio = u.result.max_embedding_norm / h.result.max_embedding_norm;
    const double ch = last_half_clip(h.result.rows);
    const double cu = last_half_clip(u.result.rows);
    const double conf_h = max_logged_conformal(h.result.rows);
    const double conf_u = max_logged_conformal(u.result.rows);
    if (cu > ch) ++clip_wins;
    ok = ok && ratio >= 10.0 && conf_h <= bound && conf_u > bound;
    d << " seed " << h.seed << ": norm ratio " << ratio << ", clip(last half) " << cu << " vs " << ch
      << ", logged conformal " << conf_u << " vs " << conf_h << ";";
  }
  ok = ok && clip_wins >= 2;
  d << " clip higher on " << clip_wins << "/3 seeds; bound " << std::setprecision(5) << bound;
  return {ok, d.str()};
}

Verdict criterion8(const std::vector<const Job*>& hard, const std::vector<const Job*>& polyak,
                   const OptimalPath& best) {
  bool ok = hard.size() == 3 && polyak.size() == 3;
  std::ostringstream d;
  d << "optimal path " << path_string(best.actions) << ";";
  for (const auto* group : {&hard, &polyak}) {
    d << (group == &hard ? " hard:" : " polyak:");
    for (const Job* j : *group) {
      const bool match = j->error.empty() && j->result.greedy_actions == best.actions;
      ok = ok && match;
      d << ' ' << (j->error.empty() ? path_string(j->result.greedy_actions) : "error") << (match ? "" : "(x)");
    }
    d << ';';
  }
  return {ok, d.str()};
}

Verdict criterion9(const std::vector<std::pair<const Job*, const Job*>>& pairs) {
  bool ok = !pairs.empty();
  std::ostringstream d;
  for (const auto& [a, b] : pairs) {
    const std::string x = slurp(a->csv);
    const std::string y = slurp(b->csv);
    const bool same = a->error.empty() && b->error.empty() && !x.empty() && x == y;
    ok = ok && same;
    d << ' ' << a->name << (same ? " identical" : " DIFFERS") << " (" << x.size() << " bytes);";
  }
  return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > 9) {
      std::cerr << "usage: acceptance [criterion 1-9 ...]\n";
      return 2;
    }
    wanted.insert(k);
  }
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto want = [&](int k) { return wanted.count(k) > 0; };

  const fs::path root = fs::temp_directory_path() / "hyperpp_acceptance";
  fs::remove_all(root);
  Runs runs(root);
  const auto t0 = Clock::now();

  std::vector<const Job*> hyper, unreg, hard, polyak;
  std::vector<std::pair<const Job*, const Job*>> repeats;
  const bool need_hyper = want(3) || want(6) || want(7) || want(9);
  for (std::uint64_t s : kSeeds) {
    if (need_hyper) hyper.push_back(&runs.add("ppo_hyperpp_seed" + std::to_string(s), hyperpp_ppo(), s));
    if (want(7)) unreg.push_back(&runs.add("ppo_unregularized_seed" + std::to_string(s), unregularized_ppo(), s));
    if (want(8) || (want(9) && s == 0)) {
      hard.push_back(&runs.add("ddqn_hard_seed" + std::to_string(s), shipped("hyperpp_ddqn.ini"), s));
    }
    if (want(8)) polyak.push_back(&runs.add("ddqn_polyak_seed" + std::to_string(s), shipped("hyperpp_ddqn_polyak.ini"), s));
  }
  if (want(9)) {
    repeats.emplace_back(hyper[0], &runs.add("ppo_hyperpp_seed0_repeat", hyperpp_ppo(), 0));
    repeats.emplace_back(hard[0], &runs.add("ddqn_hard_seed0_repeat", shipped("hyperpp_ddqn.ini"), 0));
  }
  runs.execute();

  const EnvConfig env = RunConfig{}.env;
  const OptimalPath best = optimal_policy(env);

  int failed = 0;
  const auto report = [&](int k, const char* what, const std::function<Verdict()>& f) {
    if (!want(k)) return;
    const Verdict v = f();
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << k << " " << what << ": " << v.detail << std::endl;
  };
  report(1, "gradient exactness", criterion1);
  report(2, "bound suite", criterion2);
  report(3, "geometry consistency", [&] { return criterion3(hyper); });
  report(4, "origin identities", criterion4);
  report(5, "HL-Gauss contract", criterion5);
  report(6, "PPO end-to-end", [&] { return criterion6(hyper, best.value); });
  report(7, "instability trend", [&] { return criterion7(hyper, unreg); });
  report(8, "DDQN end-to-end", [&] { return criterion8(hard, polyak, best); });
  report(9, "determinism", [&] { return criterion9(repeats); });
  std::cout << "total " << std::setprecision(4) << seconds_since(t0) << " s, " << failed << " failed" << std::endl;
  return failed == 0 ? 0 : 1;
}
