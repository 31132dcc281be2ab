#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hyperpp/checkpoint.hpp"
#include "hyperpp/checks.hpp"
#include "hyperpp/cli.hpp"
#include "hyperpp/config.hpp"

using namespace hyperpp;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hyperpp_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("gradcheck passes on a fresh build") {
  const auto r = cli({"gradcheck"});
  MESSAGE(r.out);
  CHECK(r.code == kExitOk);
  const auto names = gradcheck_suite_names();
  CHECK(names.size() >= 6);
  for (const auto& n : names) CHECK(r.out.find(n) != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("gradcheck reports every suite at 100+ draws") {
  const auto results = run_gradcheck();
  REQUIRE(results.size() == gradcheck_suite_names().size());
  for (const auto& s : results) {
    INFO(s.name);
    CHECK(s.draws >= 100);
    CHECK(s.max_rel_err <= 1e-5);
    CHECK(s.passed);
  }
}

TEST_CASE("a corrupted derivative fails and names its suite") {
  for (const auto& name : gradcheck_suite_names()) {
    INFO(name);
    const auto r = cli({"gradcheck", "--draws", "3", "--corrupt", name});
    CHECK(r.code == kExitCheckFailed);
    CHECK(r.err.find(name) != std::string::npos);
  }
  CHECK(cli({"gradcheck", "--corrupt", "no_such_suite"}).code == kExitUsage);
}

TEST_CASE("boundcheck") {
  const auto r = cli({"boundcheck"});
  MESSAGE(r.out);
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("alpha=0.95, c=1): 0.95") != std::string::npos);
  CHECK(r.out.find("4.7622") != std::string::npos);
  CHECK(r.out.find("total violations: 0") != std::string::npos);

  const auto rep = run_boundcheck();
  CHECK(rep.violations() == 0);
  CHECK(rep.sweeps.size() >= 5);
  for (const auto& s : rep.sweeps) CHECK(s.checked >= 10000);
  CHECK(rep.max_scaled_radius <= 0.95);
  CHECK(rep.max_scaled_radius > 0.9);
}

TEST_CASE("diagnose") {
  const fs::path dir = scratch_dir("diagnose");
  MetricsRow row;
  row.step = 1024;
  row.mean_return = 0.5;
  row.clip_fraction = 0.125;
  row.max_embedding_norm = 0.75;
  write_file(dir / "one.csv", metrics_header() + "\n" + format_metrics_row(row) + "\n");

  SUBCASE("single-row summary equals the row") {
    const auto s = summarize_metrics(read_metrics_csv((dir / "one.csv").string()), "one");
    CHECK(s.rows == 1);
    CHECK(s.mean[0] == 1024.0);
    CHECK(s.mean[1] == 0.5);
    CHECK(s.max[5] == 0.125);
    CHECK(s.mean[7] == s.max[7]);
    CHECK(s.last_half_clip_fraction == 0.125);
    const auto r = cli({"diagnose", (dir / "one.csv").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("0.125") != std::string::npos);
  }
  SUBCASE("pairwise ratios") {
    MetricsRow big = row;
    big.max_embedding_norm = 12.0;
    write_file(dir / "two.csv", metrics_header() + "\n" + format_metrics_row(big) + "\n");
    const auto r = cli({"diagnose", (dir / "two.csv").string(), (dir / "one.csv").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("pairwise") != std::string::npos);
    CHECK(r.out.find(" 16 ") != std::string::npos);  // 12 / 0.75
  }
  SUBCASE("malformed csv names the line") {
    write_file(dir / "bad.csv", metrics_header() + "\n" + format_metrics_row(row) + "\n1,2,3\n");
    const auto r = cli({"diagnose", (dir / "bad.csv").string()});
    CHECK(r.code == kExitCheckFailed);
    CHECK(r.err.find("bad.csv:3:") != std::string::npos);
  }
  SUBCASE("empty file list is a usage error") { CHECK(cli({"diagnose"}).code == kExitUsage); }
}

TEST_CASE("train") {
  const fs::path dir = scratch_dir("train");

  SUBCASE("missing config file") {
    const auto r = cli({"train", "--config", (dir / "missing.ini").string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("missing.ini") != std::string::npos);
  }
  SUBCASE("invalid config names the field") {
    write_file(dir / "bad.ini", "[ppo]\nclip_eps = -1\n");
    const auto r = cli({"train", "--config", (dir / "bad.ini").string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("ppo.clip_eps") != std::string::npos);
  }
  SUBCASE("two seeds write two run directories; parallel output is identical") {
    write_file(dir / "run.ini",
               "[run]\nname = tiny\nseeds = 3,4\n[ppo]\ntotal_steps = 1024\nnum_envs = 2\nrollout_length = 64\n"
               "minibatch_size = 64\n[env]\nname = chain\nchain_length = 4\n");
    const auto seq = cli({"train", "--config", (dir / "run.ini").string(), "--out", (dir / "seq").string()});
    CHECK(seq.code == kExitOk);
    CHECK(seq.out.find("final mean return") != std::string::npos);
    const auto par = cli({"--parallel-seeds", "2", "train", "--config", (dir / "run.ini").string(), "--out",
                          (dir / "par").string()});
    CHECK(par.code == kExitOk);
    for (const char* s : {"seed3", "seed4"}) {
      const fs::path a = dir / "seq" / "tiny" / s;
      CHECK(fs::exists(a / "metrics.csv"));
      CHECK(fs::exists(a / "checkpoint.bin"));
      CHECK(fs::exists(a / "config.ini"));
      CHECK(slurp(a / "metrics.csv") == slurp(dir / "par" / "tiny" / s / "metrics.csv"));
      // The config hashes differ (out_dir is part of the config); the weights must not.
      const Checkpoint ca = load_checkpoint((a / "checkpoint.bin").string());
      const Checkpoint cb = load_checkpoint((dir / "par" / "tiny" / s / "checkpoint.bin").string());
      CHECK(ca.params.values == cb.params.values);
      CHECK(ca.config_hash == config_hash(parse_config_file((a / "config.ini").string())));
    }
    CHECK(slurp(dir / "seq" / "tiny" / "seed3" / "metrics.csv") !=
          slurp(dir / "seq" / "tiny" / "seed4" / "metrics.csv"));
  }
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"train"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}
