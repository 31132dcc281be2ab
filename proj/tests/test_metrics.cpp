#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "hyperpp/metrics.hpp"
#include "hyperpp/random.hpp"

using namespace hyperpp;

TEST_CASE("header is the exact column contract") {
  CHECK(metrics_header() ==
        "step,mean_return,entropy,entropy_variance,update_kl,clip_fraction,mean_conformal_factor,"
        "max_embedding_norm,fc_grad_norm,actor_grad_norm,value_loss,policy_loss");
}

TEST_CASE("floats use the shortest round-trip form") {
  MetricsRow r;
  r.step = 1024;
  r.mean_return = 0.1;
  r.entropy = 1.0;
  r.clip_fraction = 0.0;
  r.update_kl = 1e-300;
  r.value_loss = 2.5;
  CHECK(format_metrics_row(r) == "1024,0.1,1,0,1e-300,0,0,0,0,0,2.5,0");
}

TEST_CASE("random rows round-trip bit-exactly") {
  Rng rng(mix_seed(5));
  std::string text = metrics_header() + "\n";
  std::vector<MetricsRow> rows;
  for (int i = 0; i < 500; ++i) {
    MetricsRow r;
    r.step = i * 977;
    r.mean_return = uniform(rng, -10, 10);
    r.entropy = std::exp(uniform(rng, -40, 3));
    r.entropy_variance = uniform(rng) * 1e-7;
    r.update_kl = std::ldexp(uniform(rng), -900);
    r.clip_fraction = uniform(rng);
    r.mean_conformal_factor = 1.0 + uniform(rng) * 1e6;
    r.max_embedding_norm = uniform(rng, 0, 50);
    r.fc_grad_norm = std::nextafter(1.0, 2.0);
    r.actor_grad_norm = std::numeric_limits<double>::denorm_min();
    r.value_loss = std::numeric_limits<double>::max();
    r.policy_loss = -uniform(rng);
    rows.push_back(r);
    text += format_metrics_row(r) + "\n";
  }
  CHECK(parse_metrics_csv(text) == rows);
}

TEST_CASE("writer output parses back") {
  const auto path = (std::filesystem::temp_directory_path() / "hyperpp_metrics_test.csv").string();
  MetricsRow a;
  a.step = 8;
  a.mean_return = 0.75;
  {
    MetricsWriter w(path);
    w.append(a);
    a.step = 16;
    w.append(a);
  }
  const auto rows = read_metrics_csv(path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].step == 8);
  CHECK(rows[1].step == 16);
  CHECK(rows[1].mean_return == 0.75);
  std::filesystem::remove(path);
}

TEST_CASE("malformed CSV names the line") {
  const std::string h = metrics_header() + "\n";
  try {
    parse_metrics_csv(h + "1,0,0,0,0,0,0,0,0,0,0,0\n2,0,0,x,0,0,0,0,0,0,0,0\n", "f.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("f.csv:3") != std::string::npos);
    CHECK(std::string(e.what()).find("entropy_variance") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_metrics_csv(h + "1,2,3\n"), ParseError);
  CHECK_THROWS_AS(parse_metrics_csv("step,foo\n"), ParseError);
  CHECK_THROWS_AS(parse_metrics_csv(""), ParseError);
  CHECK(parse_metrics_csv(h).empty());
  CHECK_THROWS_AS(read_metrics_csv("/nonexistent/metrics.csv"), ParseError);
}
