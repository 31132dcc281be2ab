#include "hyperpp/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "hyperpp/checkpoint.hpp"

namespace hyperpp {

Algorithm parse_algorithm(std::string_view name) {
  if (name == "ppo") return Algorithm::Ppo;
  if (name == "ddqn") return Algorithm::Ddqn;
  throw ConfigError("unknown algorithm '" + std::string(name) + "' (expected ppo or ddqn)");
}

std::string_view to_string(Algorithm a) noexcept { return a == Algorithm::Ppo ? "ppo" : "ddqn"; }

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
std::string fmt_int(T v) {
  return std::to_string(v);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
std::string fmt_list(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(xs[i]);
  }
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_num(std::string_view text, const std::string& field) {
  text = trim(text);
  T v{};
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
    throw ConfigError(field + ": cannot parse '" + std::string(text) + "' as a number");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) throw ConfigError(field + ": value must be finite");
  }
  return v;
}

bool parse_bool(std::string_view text, const std::string& field) {
  text = trim(text);
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(field + ": expected true or false, got '" + std::string(text) + "'");
}

template <typename T>
std::vector<T> parse_list(std::string_view text, const std::string& field) {
  std::vector<T> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t p = 0;
  while (true) {
    const std::size_t q = text.find(',', p);
    out.push_back(parse_num<T>(text.substr(p, q == std::string_view::npos ? std::string_view::npos : q - p), field));
    if (q == std::string_view::npos) break;
    p = q + 1;
  }
  return out;
}

struct Field {
  const char* section;
  const char* key;
  std::function<std::string()> get;
  std::function<void(std::string_view, const std::string&)> set;
};

#define HYPERPP_NUM(sec, name, expr)                                                          \
  Field {                                                                                    \
    sec, name, [&c] { return fmt_value(expr); },                                             \
        [&c](std::string_view v, const std::string& f) { expr = parse_num<std::remove_reference_t<decltype(expr)>>(v, f); } \
  }

template <typename T>
std::string fmt_value(const T& v) {
  if constexpr (std::is_floating_point_v<T>) {
    return fmt(static_cast<double>(v));
  } else {
    return fmt_int(v);
  }
}

std::vector<Field> fields(RunConfig& c) {
  std::vector<Field> f;
  // [run]
  f.push_back({"run", "algorithm", [&c] { return std::string(to_string(c.algorithm)); },
               [&c](std::string_view v, const std::string&) { c.algorithm = parse_algorithm(trim(v)); }});
  f.push_back({"run", "name", [&c] { return c.run_name; },
               [&c](std::string_view v, const std::string&) { c.run_name = std::string(trim(v)); }});
  f.push_back({"run", "out_dir", [&c] { return c.out_dir; },
               [&c](std::string_view v, const std::string&) { c.out_dir = std::string(trim(v)); }});
  f.push_back({"run", "seeds", [&c] { return fmt_list(c.seeds); },
               [&c](std::string_view v, const std::string& k) { c.seeds = parse_list<std::uint64_t>(v, k); }});

  // [encoder]
  f.push_back({"encoder", "geometry", [&c] { return std::string(to_string(c.encoder.geometry)); },
               [&c](std::string_view v, const std::string&) { c.encoder.geometry = parse_geometry(trim(v)); }});
  f.push_back({"encoder", "rmsnorm", [&c] { return fmt(c.encoder.use_rmsnorm); },
               [&c](std::string_view v, const std::string& k) { c.encoder.use_rmsnorm = parse_bool(v, k); }});
  f.push_back({"encoder", "learned_scaling", [&c] { return fmt(c.encoder.use_learned_scaling); },
               [&c](std::string_view v, const std::string& k) { c.encoder.use_learned_scaling = parse_bool(v, k); }});
  f.push_back(HYPERPP_NUM("encoder", "alpha", c.encoder.alpha));
  f.push_back(HYPERPP_NUM("encoder", "c", c.encoder.c));
  f.push_back({"encoder", "hidden_dims", [&c] { return fmt_list(c.encoder.hidden_dims); },
               [&c](std::string_view v, const std::string& k) { c.encoder.hidden_dims = parse_list<Eigen::Index>(v, k); }});
  f.push_back(HYPERPP_NUM("encoder", "latent_dim", c.encoder.latent_dim));
  f.push_back({"encoder", "activation", [&c] { return std::string(to_string(c.encoder.activation)); },
               [&c](std::string_view v, const std::string&) { c.encoder.activation = parse_activation(trim(v)); }});
  f.push_back({"encoder", "hidden_activation", [&c] { return std::string(to_string(c.encoder.hidden_activation)); },
               [&c](std::string_view v, const std::string&) { c.encoder.hidden_activation = parse_activation(trim(v)); }});

  // [value]
  f.push_back({"value", "loss", [&c] { return std::string(to_string(c.value_loss)); },
               [&c](std::string_view v, const std::string&) { c.value_loss = parse_value_loss(trim(v)); }});
  f.push_back(HYPERPP_NUM("value", "num_bins", c.hl_gauss.num_bins));
  f.push_back(HYPERPP_NUM("value", "v_min", c.hl_gauss.v_min));
  f.push_back(HYPERPP_NUM("value", "v_max", c.hl_gauss.v_max));
  f.push_back(HYPERPP_NUM("value", "sigma_ratio", c.hl_gauss.sigma_ratio));

  // [ppo]
  f.push_back(HYPERPP_NUM("ppo", "gamma", c.ppo.gamma));
  f.push_back(HYPERPP_NUM("ppo", "gae_lambda", c.ppo.gae_lambda));
  f.push_back(HYPERPP_NUM("ppo", "clip_eps", c.ppo.clip_eps));
  f.push_back(HYPERPP_NUM("ppo", "entropy_coef", c.ppo.entropy_coef));
  f.push_back(HYPERPP_NUM("ppo", "value_coef", c.ppo.value_coef));
  f.push_back(HYPERPP_NUM("ppo", "epochs_per_rollout", c.ppo.epochs_per_rollout));
  f.push_back(HYPERPP_NUM("ppo", "minibatch_size", c.ppo.minibatch_size));
  f.push_back(HYPERPP_NUM("ppo", "rollout_length", c.ppo.rollout_length));
  f.push_back(HYPERPP_NUM("ppo", "num_envs", c.ppo.num_envs));
  f.push_back({"ppo", "normalize_rewards", [&c] { return fmt(c.ppo.normalize_rewards); },
               [&c](std::string_view v, const std::string& k) { c.ppo.normalize_rewards = parse_bool(v, k); }});
  f.push_back({"ppo", "normalize_advantages", [&c] { return fmt(c.ppo.normalize_advantages); },
               [&c](std::string_view v, const std::string& k) { c.ppo.normalize_advantages = parse_bool(v, k); }});
  f.push_back(HYPERPP_NUM("ppo", "total_steps", c.ppo.total_steps));
  f.push_back(HYPERPP_NUM("ppo", "max_grad_norm", c.ppo.max_grad_norm));
  f.push_back(HYPERPP_NUM("ppo", "lr", c.ppo.adam.lr));
  f.push_back(HYPERPP_NUM("ppo", "beta1", c.ppo.adam.beta1));
  f.push_back(HYPERPP_NUM("ppo", "beta2", c.ppo.adam.beta2));
  f.push_back(HYPERPP_NUM("ppo", "adam_eps", c.ppo.adam.eps));

  // [ddqn]
  f.push_back(HYPERPP_NUM("ddqn", "gamma", c.ddqn.gamma));
  f.push_back(HYPERPP_NUM("ddqn", "eps_start", c.ddqn.eps_start));
  f.push_back(HYPERPP_NUM("ddqn", "eps_end", c.ddqn.eps_end));
  f.push_back(HYPERPP_NUM("ddqn", "exploration_fraction", c.ddqn.exploration_fraction));
  f.push_back(HYPERPP_NUM("ddqn", "buffer_capacity", c.ddqn.buffer_capacity));
  f.push_back(HYPERPP_NUM("ddqn", "target_update_period", c.ddqn.target_update_period));
  f.push_back({"ddqn", "polyak_tau", [&c] { return c.ddqn.polyak_tau ? fmt(*c.ddqn.polyak_tau) : std::string("none"); },
               [&c](std::string_view v, const std::string& k) {
                 v = trim(v);
                 if (v == "none" || v.empty()) {
                   c.ddqn.polyak_tau.reset();
                 } else {
                   c.ddqn.polyak_tau = parse_num<double>(v, k);
                 }
               }});
  f.push_back(HYPERPP_NUM("ddqn", "batch_size", c.ddqn.batch_size));
  f.push_back(HYPERPP_NUM("ddqn", "train_frequency", c.ddqn.train_frequency));
  f.push_back(HYPERPP_NUM("ddqn", "total_steps", c.ddqn.total_steps));
  f.push_back(HYPERPP_NUM("ddqn", "learning_starts", c.ddqn.learning_starts));
  f.push_back(HYPERPP_NUM("ddqn", "max_grad_norm", c.ddqn.max_grad_norm));
  f.push_back(HYPERPP_NUM("ddqn", "log_interval", c.ddqn.log_interval));
  f.push_back(HYPERPP_NUM("ddqn", "lr", c.ddqn.adam.lr));
  f.push_back(HYPERPP_NUM("ddqn", "beta1", c.ddqn.adam.beta1));
  f.push_back(HYPERPP_NUM("ddqn", "beta2", c.ddqn.adam.beta2));
  f.push_back(HYPERPP_NUM("ddqn", "adam_eps", c.ddqn.adam.eps));

  // [env]
  f.push_back({"env", "name", [&c] { return c.env.name; },
               [&c](std::string_view v, const std::string&) { c.env.name = std::string(trim(v)); }});
  f.push_back(HYPERPP_NUM("env", "depth", c.env.depth));
  f.push_back(HYPERPP_NUM("env", "branching", c.env.branching));
  f.push_back(HYPERPP_NUM("env", "seed", c.env.seed));
  f.push_back(HYPERPP_NUM("env", "chain_length", c.env.chain_length));
  return f;
}

#undef HYPERPP_NUM

}  // namespace

PPOConfig RunConfig::effective_ppo() const {
  PPOConfig p = ppo;
  p.value_loss = value_loss;
  p.hl_gauss = hl_gauss;
  return p;
}

DQNConfig RunConfig::effective_ddqn() const {
  DQNConfig d = ddqn;
  d.value_loss = value_loss;
  d.hl_gauss = hl_gauss;
  return d;
}

void RunConfig::validate() const {
  if (run_name.empty() || run_name.find('/') != std::string::npos) {
    throw ConfigError("run.name must be a non-empty name without '/'");
  }
  if (out_dir.empty()) throw ConfigError("run.out_dir must not be empty");
  if (seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t j = i + 1; j < seeds.size(); ++j) {
      if (seeds[i] == seeds[j]) throw ConfigError("run.seeds contains duplicate seed " + std::to_string(seeds[i]));
    }
  }
  for (auto h : encoder.hidden_dims) {
    if (h < 1) throw ConfigError("encoder.hidden_dims entries must be >= 1");
  }
  if (encoder.latent_dim < 2) throw ConfigError("encoder.latent_dim must be >= 2");
  if (!(encoder.alpha > 0.0 && encoder.alpha < 1.0)) throw ConfigError("encoder.alpha must be in (0,1)");
  if (!(encoder.c > 0.0)) throw ConfigError("encoder.c must be > 0");
  effective_ppo().validate();
  effective_ddqn().validate();
  env.validate();
}

RunConfig parse_config_string(std::string_view text, const std::string& source) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ": line " + std::to_string(e.line()) + ": " + e.message());
  }

  RunConfig cfg;
  auto table = fields(cfg);
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(source + ": key '" + section + "' outside of any section");
    bool known_section = false;
    for (const auto& f : table) known_section |= section == f.section;
    if (!known_section) throw ConfigError(source + ": unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      const Field* match = nullptr;
      for (const auto& f : table) {
        if (section == f.section && key == f.key) match = &f;
      }
      if (!match) throw ConfigError(source + ": unknown key " + name);
      try {
        match->set(value.data(), name);
      } catch (const ConfigError& e) {
        const std::string msg = e.what();
        throw ConfigError(msg.rfind(name, 0) == 0 ? msg : name + ": " + msg);
      }
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str(), path);
}

std::string serialize_config(const RunConfig& cfg_in) {
  RunConfig cfg = cfg_in;
  const auto table = fields(cfg);
  std::string out;
  const char* current = nullptr;
  for (const auto& f : table) {
    if (!current || std::string_view(current) != f.section) {
      if (current) out += '\n';
      out += '[';
      out += f.section;
      out += "]\n";
      current = f.section;
    }
    out += f.key;
    out += " = ";
    out += f.get();
    out += '\n';
  }
  return out;
}

std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a64(serialize_config(cfg)); }

}  // namespace hyperpp
