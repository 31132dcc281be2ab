#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "hyperpp/checks.hpp"
#include "hyperpp/manifold.hpp"
#include "hyperpp/random.hpp"
#include "hyperpp/regularization.hpp"

namespace hyperpp {
namespace {

constexpr Eigen::Index kDims[] = {8, 32, 64};
constexpr double kCurvatures[] = {0.5, 1.0, 2.0};
constexpr double kAlpha = 0.95;
// |rmsnorm(x)|^2 = d |x|^2 / (|x|^2 + d eps) rounds to exactly d once |x| is
// large, so the squared-norm comparison carries this relative slack.
constexpr double kRoundingSlack = 1e-12;

Vector draw_input(Rng& rng, Eigen::Index d) {
  std::normal_distribution<double> dist(0.0, std::pow(10.0, uniform(rng, -3.0, 3.0)));
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = dist(rng);
  return v;
}

void record(BoundSweep& s, double observed, double bound, bool ok) {
  ++s.checked;
  if (!ok) ++s.violations;
  if (bound > 0.0) s.worst_ratio = std::max(s.worst_ratio, observed / bound);
}

}  // namespace

long BoundcheckReport::violations() const {
  long n = 0;
  for (const auto& s : sweeps) n += s.violations;
  return n;
}

BoundcheckReport run_boundcheck(const BoundcheckOptions& opts) {
  BoundcheckReport rep;
  BoundSweep rms{"rmsnorm_norm < sqrt(d)"};
  BoundSweep emb_tanh{"embedding_norm < 1 (tanh)"};
  BoundSweep emb_relu{"embedding_norm < 1 (relu)"};
  BoundSweep conformal{"conformal < 2cosh^2(sqrt c)"};
  BoundSweep x0{"time component <= x0_max"};
  BoundSweep radius{"scaled radius <= alpha/sqrt(c)"};
  BoundSweep lemma{"normalized layer |f(Wx+b)|<=|x|+|b|"};

  const RmsNormConfig cfg;
  Rng rng(opts.seed);
  for (Eigen::Index d : kDims) {
    const double dd = static_cast<double>(d);
    for (double cv : kCurvatures) {
      const Curvature c(cv);
      const double conf_bound = conformal_bound_for_radius(1.0, c);
      const double x0_bound = check_cor1_x0max(Vector::Constant(1, 1.0), c);
      const double r_bound = kAlpha / c.sqrt();
      for (int i = 0; i < opts.inputs; ++i) {
        const Vector x = draw_input(rng, d);
        const double n2 = rmsnorm(x, cfg).squaredNorm();
        record(rms, std::sqrt(n2), std::sqrt(dd), n2 < dd * (1.0 + kRoundingSlack));

        for (Activation act : {Activation::TanH, Activation::ReLU}) {
          const Vector e = regularized_embedding(x, cfg, act);
          const double en = e.norm();
          record(act == Activation::TanH ? emb_tanh : emb_relu, en, 1.0, en < 1.0);

          const PoincarePoint p = poincare_exp0(TangentVector::poincare(e, c));
          const double lambda = conformal_factor(p);
          record(conformal, lambda, conf_bound, lambda < conf_bound);

          const double t = poincare_to_hyperboloid(p).time();
          record(x0, t, x0_bound, t <= x0_bound * (1.0 + kRoundingSlack));

          ScalingParams sp{uniform(rng, -20.0, 20.0), kAlpha, c};
          const PoincarePoint q = poincare_exp0(TangentVector::poincare(learned_scaling(e, sp), c));
          const double qr = q.coords().norm();
          record(radius, qr, r_bound, qr <= r_bound * (1.0 + kRoundingSlack));
          if (cv == 1.0) rep.max_scaled_radius = std::max(rep.max_scaled_radius, qr);
        }
      }
    }

    // Spectrally normalized layers: 500 matrices per width, 20 inputs each.
    for (int m = 0; m < opts.inputs / 20; ++m) {
      const Eigen::Index rows = kDims[static_cast<std::size_t>(m) % 3];
      Matrix w(rows, d);
      std::normal_distribution<double> wd(0.0, 2.0);
      for (Eigen::Index j = 0; j < w.size(); ++j) w.data()[j] = wd(rng);
      const Matrix w_hat = spectral_normalize(w, 100).w_hat;
      const Vector b = (m % 3 == 0) ? Vector::Zero(rows) : draw_input(rng, rows);
      for (int k = 0; k < 20; ++k) {
        const Activation act = k % 2 == 0 ? Activation::TanH : Activation::ReLU;
        const Vector x = draw_input(rng, d);
        Vector out = w_hat * x + b;
        for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = activate(act, out[j]);
        record(lemma, out.norm(), x.norm() + b.norm(), check_lemma1(w_hat, b, x, act));
      }
    }
  }

  rep.sweeps = {rms, emb_tanh, emb_relu, conformal, x0, radius, lemma};
  rep.scaled_radius_bound = kAlpha / Curvature(1.0).sqrt();
  rep.tanh_conformal_bound = conformal_bound_for_radius(1.0, Curvature(1.0));
  rep.x0_max = check_cor1_x0max(Vector::Constant(1, 1.0), Curvature(1.0));
  return rep;
}

void print_boundcheck(std::ostream& os, const BoundcheckReport& rep) {
  os << std::left << std::setw(38) << "sweep" << std::right << std::setw(9) << "checked" << std::setw(12)
     << "violations" << std::setw(16) << "worst/bound" << '\n';
  for (const auto& s : rep.sweeps) {
    os << std::left << std::setw(38) << s.name << std::right << std::setw(9) << s.checked << std::setw(12)
       << s.violations << std::setw(16) << std::fixed << std::setprecision(9) << s.worst_ratio
       << std::defaultfloat << '\n';
  }
  os << std::setprecision(6);
  os << "poincare radius bound (alpha=0.95, c=1): " << rep.scaled_radius_bound << " (max observed "
     << rep.max_scaled_radius << ")\n";
  os << "conformal factor bound (tanh, c=1): " << std::fixed << std::setprecision(4) << rep.tanh_conformal_bound
     << std::defaultfloat << '\n';
  os << "time component bound (c=1): " << std::setprecision(6) << rep.x0_max << '\n';
  os << "total violations: " << rep.violations() << '\n';
}

}  // namespace hyperpp
