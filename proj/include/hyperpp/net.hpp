#pragma once

// Hybrid encoder: an MLP trunk, an optional norm-bounding stack, an exponential
// map onto the chosen manifold and MLR (or linear) actor/critic heads, with a
// small reverse-mode tape over batched row-major matrices. Parameters live in
// one flat ParamStore; Adam with global gradient clipping updates them.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hyperpp/manifold.hpp"
#include "hyperpp/regularization.hpp"

namespace hyperpp {

enum class Geometry { Euclidean, Poincare, Hyperboloid };

Geometry parse_geometry(std::string_view name);
std::string_view to_string(Geometry g) noexcept;

struct EncoderConfig {
  Eigen::Index input_dim = 0;
  std::vector<Eigen::Index> hidden_dims{64, 64};
  Eigen::Index latent_dim = 32;
  Activation hidden_activation = Activation::ReLU;
  /// Bounded activation inside the regularization stack.
  Activation activation = Activation::TanH;
  Geometry geometry = Geometry::Hyperboloid;
  /// RMSNorm -> 1/sqrt(d) -> activation. When off, the last dense output goes
  /// to the (optional) learned scaling and the exponential map unchanged.
  bool use_rmsnorm = true;
  bool use_learned_scaling = true;
  double alpha = 0.95;
  double c = 1.0;
  /// Classes of the actor (or Q) head.
  Eigen::Index actor_outputs = 0;
  /// Classes of the critic head; 0 builds no critic.
  Eigen::Index critic_outputs = 0;

  void validate() const;
};

struct ParamSlice {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Index size() const noexcept { return rows * cols; }
  friend bool operator==(const ParamSlice&, const ParamSlice&) = default;
};

using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

/// Flat parameter and gradient vectors with named, disjoint, row-major slices
/// that cover both vectors exactly.
class ParamStore {
 public:
  /// Appends a zero-initialized rows x cols slice. Names are unique.
  int add(std::string name, Eigen::Index rows, Eigen::Index cols);

  /// Slice id, or -1.
  int find(std::string_view name) const noexcept;
  const ParamSlice& slice(int id) const { return layout_.at(static_cast<std::size_t>(id)); }
  const std::vector<ParamSlice>& layout() const noexcept { return layout_; }
  Eigen::Index size() const noexcept { return values.size(); }

  MatrixMap value(int id);
  ConstMatrixMap value(int id) const;
  MatrixMap grad(int id);
  ConstMatrixMap grad(int id) const;
  double grad_norm(int id) const;

  void zero_grad() { grads.setZero(); }
  bool same_layout(const ParamStore& other) const noexcept { return layout_ == other.layout_; }

  Vector values;
  Vector grads;

 private:
  std::vector<ParamSlice> layout_;
};

/// Registers every parameter of the network described by cfg and initializes
/// dense weights and biases with U(-1/sqrt(fan_in), 1/sqrt(fan_in)), MLR
/// normals with U(-1/sqrt(d), 1/sqrt(d)), MLR shifts and the scaling logit
/// with 0.
ParamStore init_params(const EncoderConfig& cfg, std::uint64_t seed);

enum class OpKind {
  Input,
  Dense,
  Activation,
  RmsNorm,
  Scale,
  LearnedScale,
  PoincareExp0,
  HyperboloidExp0,
  PoincareMlr,
  HyperboloidMlr,
};

struct TapeNode {
  OpKind kind = OpKind::Input;
  std::string name;
  int input = -1;   // producing node (every op here is unary)
  int param0 = -1;  // weight / z / xi slice
  int param1 = -1;  // bias / r slice
  Activation activation = Activation::TanH;
  double scalar = 0.0;  // constant scale, rho_max, or sqrt(c)
  Matrix value;         // N x width forward output
  Matrix grad;          // dL/dvalue, filled by backward
};

struct Tape {
  std::vector<TapeNode> nodes;
  int last_dense = -1;  // last Euclidean layer (x_E)
  int tangent = -1;     // input of the exponential map, or the Euclidean embedding
  int manifold = -1;    // exponential-map output; -1 for Euclidean
  int actor = -1;
  int critic = -1;
  bool backward_done = false;
};

/// Batch statistics of the embedding recorded during forward.
struct Probes {
  double max_embedding_norm = 0.0;   // max |tangent| over the batch
  double mean_embedding_norm = 0.0;
  double mean_conformal_factor = 0.0;
  double max_conformal_factor = 0.0;
  /// Largest conformal factor allowed by the bound for this forward; +inf
  /// when RMSNorm is off.
  double conformal_factor_bound = 0.0;
  double max_time_component = 0.0;
  double max_minkowski_residual = 0.0;  // |<x,x>_L + 1/c|, hyperboloid only
};

struct ForwardOutput {
  Matrix actor;   // N x actor_outputs
  Matrix critic;  // N x critic_outputs (empty without a critic)
  Tape tape;
  Probes probes;
};

/// Throws ContractError on shape mismatch, TrainingFault naming the layer when
/// a forward value becomes non-finite.
ForwardOutput forward(const EncoderConfig& cfg, const ParamStore& params, const Matrix& obs);

/// Accumulates dL/dparams into params.grads. d_critic may be empty when the
/// network has no critic or the loss does not touch it.
void backward(const EncoderConfig& cfg, Tape& tape, const Matrix& d_actor, const Matrix& d_critic,
              ParamStore& params);

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-5;
};

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t t = 0;
  AdamConfig cfg;

  static AdamState init(Eigen::Index size, const AdamConfig& cfg);
};

struct StepStats {
  double grad_norm = 0.0;  // before clipping
  double clip_scale = 1.0;
};

/// Global L2 clipping to max_grad_norm (<= 0 disables), bias-corrected Adam
/// update, then zeroes the gradients. Non-finite gradients raise TrainingFault.
StepStats adam_step(ParamStore& params, AdamState& st, double max_grad_norm);

/// Norms of the factors of dL/dW_fc = dL/dv * dv/dx_H * dx_H/dx_E * dx_E/dW_fc,
/// averaged over the batch where a factor is per sample.
struct GradientChainReport {
  double loss_grad_norm = 0.0;           // |dL/dv|_F for the actor head
  double mlr_input_jacobian_norm = 0.0;  // mean |dv/dx_H|_F
  double exp_map_jacobian_norm = 0.0;    // mean spectral norm; 1 for Euclidean
  double exp_map_radial_factor = 0.0;    // mean derivative along the tangent direction
  double fc_grad_norm = 0.0;             // |dL/d(W_fc, b_fc)|_F
};

GradientChainReport gradient_chain_report(const EncoderConfig& cfg, const Tape& tape,
                                          const ParamStore& params);

/// Names of the dense layers in forward order; the last one is "fc".
std::vector<std::string> dense_layer_names(const EncoderConfig& cfg);

}  // namespace hyperpp
