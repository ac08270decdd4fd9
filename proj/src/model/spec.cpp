#include "hyres/model/spec.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "util/json_fields.hpp"

namespace hyres {

using nlohmann::json;

std::string to_string(EmbeddingKind k) {
  switch (k) {
    case EmbeddingKind::Identity: return "identity";
    case EmbeddingKind::Fourier: return "fourier";
    case EmbeddingKind::Periodic: return "periodic";
    case EmbeddingKind::FourierPeriodic: return "fourier+periodic";
  }
  return "?";
}

std::string to_string(ArchKind k) {
  switch (k) {
    case ArchKind::HyRes: return "hyres";
    case ArchKind::Pinn: return "pinn";
    case ArchKind::ResPinn: return "respinn";
    case ArchKind::Expert: return "expert";
    case ArchKind::RbfNet: return "rbfnet";
  }
  return "?";
}

EmbeddingKind embedding_kind_from_string(const std::string& s) {
  for (auto k : {EmbeddingKind::Identity, EmbeddingKind::Fourier, EmbeddingKind::Periodic,
                 EmbeddingKind::FourierPeriodic})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("embedding.kind: unknown value '" + s + "'");
}

ArchKind arch_kind_from_string(const std::string& s) {
  for (auto k : {ArchKind::HyRes, ArchKind::Pinn, ArchKind::ResPinn, ArchKind::Expert, ArchKind::RbfNet})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("model.kind: unknown architecture '" + s + "'");
}

std::size_t EmbeddingSpec::output_dim(std::size_t d) const {
  std::size_t w = d;
  if (has_periodic()) w += periodic_dims.size();
  if (has_fourier()) w = 2 * fourier_count;
  return w;
}

void EmbeddingSpec::validate(std::size_t input_dim) const {
  if (has_fourier()) {
    if (!(fourier_scale > 0.0)) throw std::invalid_argument("embedding.fourier_scale: must be positive");
    if (fourier_count == 0) throw std::invalid_argument("embedding.fourier_count: must be at least 1");
  }
  if (has_periodic()) {
    if (periodic_dims.empty()) throw std::invalid_argument("embedding.periodic_dims: periodic embedding needs a dim");
    if (period_lengths.size() != periodic_dims.size())
      throw std::invalid_argument("embedding.period_lengths: missing period length for a periodic dim");
    for (std::size_t k = 0; k < periodic_dims.size(); ++k) {
      if (periodic_dims[k] >= input_dim) throw std::invalid_argument("embedding.periodic_dims: index out of range");
      if (!(period_lengths[k] > 0.0)) throw std::invalid_argument("embedding.period_lengths: must be positive");
    }
  }
}

void HybridBlockSpec::validate() const {
  if (width == 0) throw std::invalid_argument("block.width: must be at least 1");
  if (rbf_centers == 0) throw std::invalid_argument("block.rbf_centers: must be at least 1");
  if (nn_depth == 0) throw std::invalid_argument("block.nn_depth: must be at least 1");
  if (nn_width == 0) throw std::invalid_argument("block.nn_width: must be at least 1");
  if (kernel != "wendland-c4") throw std::invalid_argument("block.kernel: only wendland-c4 is supported");
  if (center_init != "poisson-disk") throw std::invalid_argument("block.center_init: only poisson-disk is supported");
  if (tau_init < 0.0) throw std::invalid_argument("block.tau_init: must be positive (or 0 for automatic)");
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw std::invalid_argument("model.input_dim: must be at least 1");
  if (output_dim == 0) throw std::invalid_argument("model.output_dim: must be at least 1");
  if (!input_lo.empty() || !input_hi.empty()) {
    if (input_lo.size() != input_dim || input_hi.size() != input_dim)
      throw std::invalid_argument("model.input_lo/input_hi: need one bound per input dim");
    for (std::size_t k = 0; k < input_dim; ++k)
      if (!(input_hi[k] > input_lo[k])) throw std::invalid_argument("model.input_hi: must exceed input_lo");
  }
  embedding.validate(input_dim);
  for (const auto& b : blocks) b.validate();
  switch (kind) {
    case ArchKind::HyRes:
      for (const auto& b : blocks)
        if (b.width != blocks.front().width)
          throw std::invalid_argument("model.blocks: all block widths must match for the skip connection");
      if (head_depth == 0) throw std::invalid_argument("model.head_depth: must be at least 1");
      if (head_width == 0) throw std::invalid_argument("model.head_width: must be at least 1");
      break;
    case ArchKind::RbfNet:
      if (blocks.size() != 1) throw std::invalid_argument("model.blocks: rbfnet takes exactly one block");
      break;
    default:
      if (mlp_depth < 1) throw std::invalid_argument("model.mlp_depth: must be at least 1");
      if (mlp_width == 0) throw std::invalid_argument("model.mlp_width: must be at least 1");
      if (kind == ArchKind::ResPinn && mlp_depth < 2)
        throw std::invalid_argument("model.mlp_depth: respinn needs at least 2 layers");
  }
  if (rwf && !(rwf_sigma >= 0.0)) throw std::invalid_argument("model.rwf_sigma: must be nonnegative");
}

using detail::read;
using detail::reject_unknown;

void to_json(json& j, const EmbeddingSpec& s) {
  j = json{{"kind", to_string(s.kind)},
           {"fourier_scale", s.fourier_scale},
           {"fourier_count", s.fourier_count},
           {"periodic_dims", s.periodic_dims},
           {"period_lengths", s.period_lengths}};
}

void from_json(const json& j, EmbeddingSpec& s) {
  reject_unknown(j, {"kind", "fourier_scale", "fourier_count", "periodic_dims", "period_lengths"}, "embedding");
  std::string kind = to_string(s.kind);
  read(j, "kind", kind, "embedding");
  s.kind = embedding_kind_from_string(kind);
  read(j, "fourier_scale", s.fourier_scale, "embedding");
  read(j, "fourier_count", s.fourier_count, "embedding");
  read(j, "periodic_dims", s.periodic_dims, "embedding");
  read(j, "period_lengths", s.period_lengths, "embedding");
}

void to_json(json& j, const HybridBlockSpec& s) {
  j = json{{"width", s.width},     {"rbf_centers", s.rbf_centers}, {"nn_depth", s.nn_depth},
           {"nn_width", s.nn_width}, {"kernel", s.kernel},         {"center_init", s.center_init},
           {"tau_init", s.tau_init}};
}

void from_json(const json& j, HybridBlockSpec& s) {
  reject_unknown(j, {"width", "rbf_centers", "nn_depth", "nn_width", "kernel", "center_init", "tau_init"}, "block");
  read(j, "width", s.width, "block");
  read(j, "rbf_centers", s.rbf_centers, "block");
  read(j, "nn_depth", s.nn_depth, "block");
  read(j, "nn_width", s.nn_width, "block");
  read(j, "kernel", s.kernel, "block");
  read(j, "center_init", s.center_init, "block");
  read(j, "tau_init", s.tau_init, "block");
}

void to_json(json& j, const ModelSpec& s) {
  j = json{{"kind", to_string(s.kind)},
           {"input_dim", s.input_dim},
           {"output_dim", s.output_dim},
           {"input_lo", s.input_lo},
           {"input_hi", s.input_hi},
           {"embedding", s.embedding},
           {"blocks", s.blocks},
           {"head_depth", s.head_depth},
           {"head_width", s.head_width},
           {"mlp_depth", s.mlp_depth},
           {"mlp_width", s.mlp_width},
           {"rwf", s.rwf},
           {"rwf_mu", s.rwf_mu},
           {"rwf_sigma", s.rwf_sigma}};
}

void from_json(const json& j, ModelSpec& s) {
  reject_unknown(j,
                 {"kind", "input_dim", "output_dim", "input_lo", "input_hi", "embedding", "blocks", "head_depth",
                  "head_width", "mlp_depth", "mlp_width", "rwf", "rwf_mu", "rwf_sigma"},
                 "model");
  std::string kind = to_string(s.kind);
  read(j, "kind", kind, "model");
  s.kind = arch_kind_from_string(kind);
  read(j, "input_dim", s.input_dim, "model");
  read(j, "output_dim", s.output_dim, "model");
  read(j, "input_lo", s.input_lo, "model");
  read(j, "input_hi", s.input_hi, "model");
  if (j.contains("embedding")) from_json(j.at("embedding"), s.embedding);
  if (j.contains("blocks")) {
    if (!j.at("blocks").is_array()) throw std::invalid_argument("model.blocks: expected an array");
    s.blocks.clear();
    for (const auto& b : j.at("blocks")) {
      HybridBlockSpec spec;
      from_json(b, spec);
      s.blocks.push_back(spec);
    }
  }
  read(j, "head_depth", s.head_depth, "model");
  read(j, "head_width", s.head_width, "model");
  read(j, "mlp_depth", s.mlp_depth, "model");
  read(j, "mlp_width", s.mlp_width, "model");
  read(j, "rwf", s.rwf, "model");
  read(j, "rwf_mu", s.rwf_mu, "model");
  read(j, "rwf_sigma", s.rwf_sigma, "model");
}

}  // namespace hyres
