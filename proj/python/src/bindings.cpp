#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hyperpp/checks.hpp"
#include "hyperpp/cli.hpp"
#include "hyperpp/config.hpp"
#include "hyperpp/envs.hpp"
#include "hyperpp/manifold.hpp"
#include "hyperpp/metrics.hpp"
#include "hyperpp/regularization.hpp"
#include "hyperpp/train.hpp"
#include "hyperpp/value_loss.hpp"

namespace py = pybind11;
using namespace hyperpp;

namespace {

py::dict row_dict(const MetricsRow& r) {
  py::dict d;
  d["step"] = r.step;
  d["mean_return"] = r.mean_return;
  d["entropy"] = r.entropy;
  d["entropy_variance"] = r.entropy_variance;
  d["update_kl"] = r.update_kl;
  d["clip_fraction"] = r.clip_fraction;
  d["mean_conformal_factor"] = r.mean_conformal_factor;
  d["max_embedding_norm"] = r.max_embedding_norm;
  d["fc_grad_norm"] = r.fc_grad_norm;
  d["actor_grad_norm"] = r.actor_grad_norm;
  d["value_loss"] = r.value_loss;
  d["policy_loss"] = r.policy_loss;
  return d;
}

py::dict train(const std::string& config_text, std::uint64_t seed, const std::string& metrics_csv) {
  const RunConfig cfg = parse_config_string(config_text);
  const TrainOutputs out{metrics_csv, "", config_hash(cfg)};
  TrainResult r;
  {
    py::gil_scoped_release release;
    r = cfg.algorithm == Algorithm::Ppo ? train_ppo(cfg.effective_ppo(), cfg.encoder, cfg.env, seed, out)
                                        : train_ddqn(cfg.effective_ddqn(), cfg.encoder, cfg.env, seed, out);
  }
  py::dict d;
  py::list rows;
  for (const auto& row : r.rows) rows.append(row_dict(row));
  d["rows"] = rows;
  d["env_steps"] = r.env_steps;
  d["final_mean_return"] = r.final_mean_return;
  d["greedy_actions"] = r.greedy_actions;
  d["greedy_return"] = r.greedy_return;
  d["max_conformal_factor"] = r.max_conformal_factor;
  d["max_embedding_norm"] = r.max_embedding_norm;
  d["max_minkowski_residual"] = r.max_minkowski_residual;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hyperbolic deep RL core (C++)";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<TrainingFault>(m, "TrainingFault", PyExc_RuntimeError);

  m.def("metrics_columns", [] {
    std::vector<std::string> cols(kMetricsColumns.begin(), kMetricsColumns.end());
    return cols;
  });
  m.def("metrics_header", &metrics_header);
  m.def("read_metrics_csv", [](const std::string& path) {
    py::list rows;
    for (const auto& r : read_metrics_csv(path)) rows.append(row_dict(r));
    return rows;
  });

  m.def("poincare_exp0", [](const Vector& v, double c) {
    return Vector(poincare_exp0(TangentVector::poincare(v, Curvature(c))).coords());
  }, py::arg("v"), py::arg("c") = 1.0);
  m.def("hyperboloid_exp0", [](const Vector& v, double c) {
    return Vector(hyperboloid_exp0(TangentVector::hyperboloid_from_euclidean(v, Curvature(c))).coords());
  }, py::arg("v"), py::arg("c") = 1.0, "v holds the space components of the tangent vector");
  m.def("conformal_factor", [](const Vector& x, double c) {
    return conformal_factor(PoincarePoint(x, Curvature(c)));
  }, py::arg("x"), py::arg("c") = 1.0);
  m.def("rmsnorm", [](const Vector& x) { return rmsnorm(x); });
  m.def("conformal_bound", [](double radius, double c) { return conformal_bound_for_radius(radius, Curvature(c)); },
        py::arg("radius") = 1.0, py::arg("c") = 1.0);
  m.def("hl_gauss_encode", [](double y) { return hl_gauss_encode(y, HlGaussConfig{}).probs; });
  m.def("hl_gauss_decode", [](const Vector& p) { return hl_gauss_decode({p}, HlGaussConfig{}); });

  m.def("default_config", [] { return serialize_config(RunConfig{}); });
  m.def("normalize_config", [](const std::string& text) { return serialize_config(parse_config_string(text)); });
  m.def("config_hash", [](const std::string& text) { return config_hash(parse_config_string(text)); });
  m.def("optimal_return", [](const std::string& config_text) {
    return optimal_policy(parse_config_string(config_text).env).value;
  }, py::arg("config_text") = "");

  m.def("train", &train, py::arg("config_text"), py::arg("seed") = 0, py::arg("metrics_csv") = "");

  m.def("gradcheck", [](int draws) {
    GradcheckOptions opts;
    opts.draws = draws;
    py::dict out;
    for (const auto& r : run_gradcheck(opts)) out[py::str(r.name)] = r.max_rel_err;
    return out;
  }, py::arg("draws") = 100);
  m.def("boundcheck_violations", [](int inputs) {
    BoundcheckOptions opts;
    opts.inputs = inputs;
    return run_boundcheck(opts).violations();
  }, py::arg("inputs") = 10000);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
