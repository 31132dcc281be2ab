#include "hyperpp/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "hyperpp/checks.hpp"
#include "hyperpp/config.hpp"
#include "hyperpp/errors.hpp"
#include "hyperpp/train.hpp"

namespace hyperpp {
namespace {

namespace fs = std::filesystem;

struct SeedOutcome {
  std::string log;
  bool ok = false;
};

std::string join_actions(const std::vector<int>& a) {
  std::string s;
  for (int x : a) s += std::to_string(x);
  return s;
}

SeedOutcome train_one_seed(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir) {
  SeedOutcome res;
  std::ostringstream log;
  log << std::setprecision(6);
  try {
    fs::create_directories(dir);
    {
      std::ofstream ini(dir / "config.ini", std::ios::binary | std::ios::trunc);
      ini << serialize_config(cfg);
    }
    TrainOutputs out{(dir / "metrics.csv").string(), (dir / "checkpoint.bin").string(), config_hash(cfg)};
    const TrainResult r = cfg.algorithm == Algorithm::Ppo
                              ? train_ppo(cfg.effective_ppo(), cfg.encoder, cfg.env, seed, out)
                              : train_ddqn(cfg.effective_ddqn(), cfg.encoder, cfg.env, seed, out);
    const OptimalPath best = optimal_policy(cfg.env);
    log << "seed " << seed << ": final mean return " << r.final_mean_return << " (optimal " << best.value
        << ", greedy " << r.greedy_return << " via " << join_actions(r.greedy_actions) << ", "
        << r.env_steps << " steps) -> " << dir.string() << '\n';
    res.ok = true;
  } catch (const TrainingFault& e) {
    log << "seed " << seed << ": training fault at " << e.what() << '\n';
  } catch (const std::exception& e) {
    log << "seed " << seed << ": " << e.what() << '\n';
  }
  res.log = log.str();
  return res;
}

int cmd_train(const std::string& config_path, const std::string& out_override, int parallel, std::ostream& out,
              std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_config_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  const fs::path root = fs::path(cfg.out_dir) / cfg.run_name;
  const std::size_t n = cfg.seeds.size();
  std::vector<SeedOutcome> outcomes(n);
  const auto seed_dir = [&](std::size_t i) { return root / ("seed" + std::to_string(cfg.seeds[i])); };

  const int workers = std::clamp<int>(parallel, 1, static_cast<int>(n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      outcomes[i] = train_one_seed(cfg, cfg.seeds[i], seed_dir(i));
      out << outcomes[i].log << std::flush;
    }
  } else {
    // Seeds share nothing but the read-only config; each writes its own
    // directory. Logs are printed in seed order once all are done.
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) outcomes[i] = train_one_seed(cfg, cfg.seeds[i], seed_dir(i));
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& o : outcomes) out << o.log;
  }
  const bool all_ok = std::all_of(outcomes.begin(), outcomes.end(), [](const SeedOutcome& o) { return o.ok; });
  return all_ok ? kExitOk : kExitCheckFailed;
}

int cmd_gradcheck(int draws, const std::string& corrupt, std::ostream& out, std::ostream& err) {
  GradcheckOptions opts;
  opts.draws = draws;
  opts.corrupt_suite = corrupt;
  std::vector<SuiteResult> results;
  try {
    results = run_gradcheck(opts);
  } catch (const ContractError& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }
  print_gradcheck(out, results, opts.tolerance);
  int failed = 0;
  for (const auto& r : results) {
    if (!r.passed) {
      err << "gradcheck failed: " << r.name << " (max relative error " << r.max_rel_err << ")\n";
      ++failed;
    }
  }
  return failed == 0 ? kExitOk : kExitCheckFailed;
}

int cmd_boundcheck(int inputs, std::ostream& out, std::ostream& err) {
  BoundcheckOptions opts;
  opts.inputs = inputs;
  const BoundcheckReport rep = run_boundcheck(opts);
  print_boundcheck(out, rep);
  if (rep.violations() > 0) {
    err << "boundcheck failed: " << rep.violations() << " violations\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_diagnose(const std::vector<std::string>& paths, std::ostream& out, std::ostream& err) {
  std::vector<RunSummary> runs;
  try {
    for (const auto& p : paths) runs.push_back(summarize_metrics(read_metrics_csv(p), p));
  } catch (const ParseError& e) {
    err << "malformed metrics: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const ContractError& e) {
    err << e.what() << '\n';
    return kExitCheckFailed;
  }
  print_diagnosis(out, runs);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyperbolic deep reinforcement learning with stabilized encoders", "hyperpp"};
  app.require_subcommand(1);
  app.fallthrough();
  int parallel = 1;
  app.add_option("--parallel-seeds", parallel, "Train up to n seeds concurrently")->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "Train every seed of a run config");
  std::string config_path;
  std::string out_dir;
  train->add_option("--config", config_path, "Run config (INI)")->required();
  train->add_option("--out", out_dir, "Override [run] out_dir");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every analytic derivative");
  int draws = 100;
  std::string corrupt;
  grad->add_option("--draws", draws, "Random draws per suite")->check(CLI::PositiveNumber);
  grad->add_option("--corrupt", corrupt, "Perturb the named suite's derivative (self-test)");

  auto* bound = app.add_subcommand("boundcheck", "Sweep the regularization norm bounds");
  int inputs = 10000;
  bound->add_option("--inputs", inputs, "Random inputs per (d, c) cell")->check(CLI::PositiveNumber);

  auto* diag = app.add_subcommand("diagnose", "Summarize metrics.csv files and compare runs");
  std::vector<std::string> csvs;
  diag->add_option("csv", csvs, "metrics.csv paths")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  if (train->parsed()) return cmd_train(config_path, out_dir, parallel, out, err);
  if (grad->parsed()) return cmd_gradcheck(draws, corrupt, out, err);
  if (bound->parsed()) return cmd_boundcheck(inputs, out, err);
  if (diag->parsed()) return cmd_diagnose(csvs, out, err);
  return kExitUsage;
}

}  // namespace hyperpp
