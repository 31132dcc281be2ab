#include <doctest.h>

#include <cmath>
#include <vector>

#include "hyperpp/softmax.hpp"
#include "hyperpp/value_loss.hpp"
#include "test_support.hpp"

using namespace hyperpp;
using hyperpp::testing::normal_vector;
using hyperpp::testing::rel_err;

namespace {

// Composite Simpson integration of the Gaussian density over each bin, then
// renormalized over the support.
Vector quadrature_oracle(double y, const HlGaussConfig& cfg) {
  const double s = cfg.sigma();
  const double w = cfg.bin_width();
  const int n = 4000;
  Vector p(cfg.num_bins);
  for (int i = 0; i < cfg.num_bins; ++i) {
    const double lo = cfg.v_min + i * w;
    const double h = w / n;
    auto pdf = [&](double t) {
      const double u = (t - y) / s;
      return std::exp(-0.5 * u * u) / (s * std::sqrt(2.0 * M_PI));
    };
    double acc = pdf(lo) + pdf(lo + w);
    for (int j = 1; j < n; ++j) acc += (j % 2 ? 4.0 : 2.0) * pdf(lo + j * h);
    p[i] = acc * h / 3.0;
  }
  return p / p.sum();
}

}  // namespace

TEST_CASE("HlGaussConfig") {
  const HlGaussConfig cfg;
  CHECK(cfg.num_bins == 51);
  CHECK(cfg.v_min == -10.0);
  CHECK(cfg.v_max == 10.0);
  CHECK(cfg.sigma() == doctest::Approx(0.75 * 20.0 / 51.0));
  CHECK(cfg.center(25) == doctest::Approx(0.0));
  CHECK_THROWS_AS((HlGaussConfig{1, -1.0, 1.0, 0.75}.validate()), ContractError);
  CHECK_THROWS_AS((HlGaussConfig{5, 1.0, 1.0, 0.75}.validate()), ContractError);
  CHECK_THROWS_AS((HlGaussConfig{5, -1.0, 1.0, 0.0}.validate()), ContractError);
}

TEST_CASE("hl_gauss_encode") {
  const HlGaussConfig cfg;
  SUBCASE("symmetric about zero") {
    const auto d = hl_gauss_encode(0.0, cfg);
    for (int i = 0; i < cfg.num_bins; ++i) CHECK(d.probs[i] == doctest::Approx(d.probs[cfg.num_bins - 1 - i]).epsilon(1e-14));
  }
  SUBCASE("valid distribution for random targets") {
    Rng rng(11);
    for (int i = 0; i < 10000; ++i) {
      const double y = uniform(rng, -30.0, 30.0);
      const auto d = hl_gauss_encode(y, cfg);
      CHECK(d.probs.minCoeff() >= 0.0);
      CHECK(std::abs(d.probs.sum() - 1.0) <= 1e-12);
    }
  }
  SUBCASE("matches quadrature at y = 3.7") {
    const Vector oracle = quadrature_oracle(3.7, cfg);
    const Vector p = hl_gauss_encode(3.7, cfg).probs;
    CHECK((p - oracle).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("targets are clamped to the support") {
    CHECK(rel_err(hl_gauss_encode(50.0, cfg).probs, hl_gauss_encode(10.0, cfg).probs) == 0.0);
    CHECK(rel_err(hl_gauss_encode(-1e9, cfg).probs, hl_gauss_encode(-10.0, cfg).probs) == 0.0);
  }
  CHECK_THROWS_AS(hl_gauss_encode(NAN, cfg), DomainError);
}

TEST_CASE("hl_gauss_decode") {
  const HlGaussConfig cfg;
  ValueDistribution one_hot{Vector::Zero(cfg.num_bins)};
  one_hot.probs[30] = 1.0;
  CHECK(hl_gauss_decode(one_hot, cfg) == doctest::Approx(cfg.center(30)));
  const ValueDistribution flat{Vector::Constant(cfg.num_bins, 1.0 / cfg.num_bins)};
  CHECK(std::abs(hl_gauss_decode(flat, cfg)) <= 1e-12);
  for (double y = -9.5; y <= 9.5; y += 0.01) {
    CHECK(std::abs(hl_gauss_decode(hl_gauss_encode(y, cfg), cfg) - y) <= cfg.bin_width() / 2.0);
  }
  const Vector logits = hl_gauss_encode(2.0, cfg).probs.array().log();
  CHECK(hl_gauss_decode_logits({logits.data(), static_cast<size_t>(logits.size())}, cfg) ==
        doctest::Approx(hl_gauss_decode(hl_gauss_encode(2.0, cfg), cfg)).epsilon(1e-12));
}

TEST_CASE("hl_gauss_loss") {
  const HlGaussConfig cfg;
  Rng rng(13);
  SUBCASE("zero gradient at the fixed point") {
    Matrix logits(2, cfg.num_bins);
    const std::vector<double> t = {1.5, -4.0};
    for (int i = 0; i < 2; ++i) logits.row(i) = hl_gauss_encode(t[i], cfg).probs.array().log().transpose();
    const auto lg = hl_gauss_loss(logits, t, cfg);
    CHECK(lg.grad.cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("gradient matches finite differences") {
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + trial % 4;
      Matrix logits(n, cfg.num_bins);
      for (Eigen::Index j = 0; j < logits.size(); ++j) logits.data()[j] = normal_vector(rng, 1, 2.0)[0];
      std::vector<double> t(n);
      for (auto& v : t) v = uniform(rng, -12.0, 12.0);
      const auto lg = hl_gauss_loss(logits, t, cfg);
      Matrix fd(n, cfg.num_bins);
      for (Eigen::Index j = 0; j < logits.size(); ++j) {
        const double h = 1e-6 * (1.0 + std::abs(logits.data()[j]));
        Matrix lp = logits, lm = logits;
        lp.data()[j] += h;
        lm.data()[j] -= h;
        fd.data()[j] = (hl_gauss_loss(lp, t, cfg).loss - hl_gauss_loss(lm, t, cfg).loss) / (2.0 * h);
      }
      CHECK(rel_err(lg.grad, fd) <= 1e-6);
    }
  }
  SUBCASE("gradient entries are bounded by 1/N") {
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = 1 + trial % 16;
      Matrix logits(n, cfg.num_bins);
      for (Eigen::Index j = 0; j < logits.size(); ++j) logits.data()[j] = normal_vector(rng, 1, 50.0)[0];
      std::vector<double> t(n);
      for (auto& v : t) v = normal_vector(rng, 1, 1e4)[0];
      CHECK(hl_gauss_loss(logits, t, cfg).grad.cwiseAbs().maxCoeff() <= 1.0 / n);
    }
  }
  CHECK_THROWS_AS(hl_gauss_loss(Matrix::Zero(2, 5), std::vector<double>{0.0, 0.0}, cfg), ContractError);
  CHECK_THROWS_AS(hl_gauss_loss(Matrix::Zero(2, 51), std::vector<double>{0.0}, cfg), ContractError);
}

TEST_CASE("mse_loss") {
  const std::vector<double> v = {1.0, 2.0};
  const auto same = mse_loss(v, v);
  CHECK(same.loss == 0.0);
  CHECK(same.grad.cwiseAbs().maxCoeff() == 0.0);
  const auto one = mse_loss(std::vector<double>{4.0}, std::vector<double>{1.0});
  CHECK(one.loss == 9.0);
  CHECK(one.grad(0, 0) == 6.0);
  // Unlike the HL-Gauss logit gradient, this grows without bound.
  for (double residual : {1.0, 10.0, 1000.0}) {
    CHECK(mse_loss(std::vector<double>{residual}, std::vector<double>{0.0}).grad(0, 0) == 2.0 * residual);
  }
  CHECK_THROWS_AS(mse_loss(std::vector<double>{1.0}, std::vector<double>{}), ContractError);
}
