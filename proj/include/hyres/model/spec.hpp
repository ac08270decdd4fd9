#pragma once
// Declarative architecture descriptions.

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace hyres {

enum class EmbeddingKind { Identity, Fourier, Periodic, FourierPeriodic };
enum class ArchKind { HyRes, Pinn, ResPinn, Expert, RbfNet };

std::string to_string(EmbeddingKind k);
std::string to_string(ArchKind k);
EmbeddingKind embedding_kind_from_string(const std::string& s);
ArchKind arch_kind_from_string(const std::string& s);

struct EmbeddingSpec {
  EmbeddingKind kind = EmbeddingKind::Identity;
  double fourier_scale = 2.0;
  std::size_t fourier_count = 64;
  std::vector<std::size_t> periodic_dims;
  std::vector<double> period_lengths;  // one per periodic dim

  bool has_fourier() const { return kind == EmbeddingKind::Fourier || kind == EmbeddingKind::FourierPeriodic; }
  bool has_periodic() const { return kind == EmbeddingKind::Periodic || kind == EmbeddingKind::FourierPeriodic; }
  /// Output width for an input of width d.
  std::size_t output_dim(std::size_t d) const;
  void validate(std::size_t input_dim) const;
};

struct HybridBlockSpec {
  std::size_t width = 64;
  std::size_t rbf_centers = 128;
  std::size_t nn_depth = 2;
  std::size_t nn_width = 64;
  std::string kernel = "wendland-c4";
  std::string center_init = "poisson-disk";
  /// Initial support radius; 0 selects twice the Poisson-disk radius.
  double tau_init = 0.0;

  void validate() const;
};

struct ModelSpec {
  ArchKind kind = ArchKind::HyRes;
  std::size_t input_dim = 2;
  std::size_t output_dim = 1;
  /// Input box. Non-periodic coordinates are mapped affinely onto [-1, 1];
  /// empty means no rescaling.
  std::vector<double> input_lo, input_hi;
  EmbeddingSpec embedding;

  // hyres: residual blocks and head. rbfnet uses blocks[0] for its layer.
  std::vector<HybridBlockSpec> blocks;
  std::size_t head_depth = 3;
  std::size_t head_width = 64;

  // pinn, respinn, expert: dense layer count (including output) and width.
  std::size_t mlp_depth = 7;
  std::size_t mlp_width = 64;

  bool rwf = true;
  double rwf_mu = 1.0;
  double rwf_sigma = 0.1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

void to_json(nlohmann::json& j, const EmbeddingSpec& s);
void from_json(const nlohmann::json& j, EmbeddingSpec& s);
void to_json(nlohmann::json& j, const HybridBlockSpec& s);
void from_json(const nlohmann::json& j, HybridBlockSpec& s);
void to_json(nlohmann::json& j, const ModelSpec& s);
void from_json(const nlohmann::json& j, ModelSpec& s);

}  // namespace hyres
