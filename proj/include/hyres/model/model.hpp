#pragma once
// Network architectures: embeddings, dense stacks with optional random weight
// factorization, Wendland RBF layers, hybrid residual blocks, the full hybrid
// model and the baselines.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hyres/model/params.hpp"
#include "hyres/model/spec.hpp"

namespace hyres {

/// The gate function.
inline double phi(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Initial beta so that phi(beta) = 0.999.
inline constexpr double kBetaInit = 6.9068;

/// Periodic and Fourier features of z (already rescaled). Fourier features use
/// the fixed matrix `embed.B` from `params`.
Var embed(const Var& z, const EmbeddingSpec& spec, const BoundParams& params);

/// One dense layer `prefix`: a W + b, followed by tanh when `activate`.
/// With random weight factorization W = V diag(exp(g)).
Var dense_forward(const Var& a, const BoundParams& params, const std::string& prefix, bool activate);

/// Dense stack `prefix.0 .. prefix.(depth-1)`; tanh on all but the last layer.
Var mlp_forward(const Var& a, const BoundParams& params, const std::string& prefix, std::size_t depth);

/// K W with K_ij = psi(|a_i - c_j|; tau_j).
Var rbf_net_forward(const Var& a, const Var& centers, const Var& tau, const Var& W);

struct BlockTrace {
  Array rbf;      // F_R
  Array nn;       // F_N
  Array mixed;    // phi(alpha) F_R + (1 - phi(alpha)) F_N
  Array output;   // tanh(mixed)
  Array skip;     // abar after the gated skip
};

struct ForwardTrace {
  Array embedding;
  Array abar0;
  std::vector<BlockTrace> blocks;
};

/// tanh(phi(alpha) F_R(a) + (1 - phi(alpha)) F_N(a)) for block `prefix`.
Var hybrid_block_forward(const Var& a, const BoundParams& params, const std::string& prefix, std::size_t nn_depth,
                         BlockTrace* trace = nullptr);

class Model {
 public:
  /// Validates `spec` and draws all parameters from `seed`.
  static Model build(const ModelSpec& spec, std::uint64_t seed);
  /// Rebuilds around existing parameters (checkpoint restore).
  Model(ModelSpec spec, std::uint64_t seed, ParamStore params);

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  /// Output (N x output_dim) for input rows x (N x input_dim).
  Var forward(const BoundParams& params, const Var& x, ForwardTrace* trace = nullptr) const;
  /// Evaluation without parameter gradients, batched over rows.
  Array predict(const Array& x) const;

  std::size_t block_count() const;
  /// Gate parameter names, empty for architectures without gates.
  std::vector<std::string> alpha_names() const;
  std::vector<std::string> beta_names() const;
  /// Support-radius parameter names (the RBF layers).
  std::vector<std::string> tau_names() const;

 private:
  Model() = default;
  Var rescale(const Var& x) const;

  ModelSpec spec_;
  std::uint64_t seed_ = 0;
  ParamStore params_;
};

}  // namespace hyres
