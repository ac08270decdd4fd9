#include "hyres/model/params.hpp"

#include <bit>
#include <cstdint>
#include <stdexcept>

namespace hyres {

std::size_t ParamStore::add(std::string name, Array value, std::string init, bool trainable) {
  if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate parameter '" + name + "'");
  index_.emplace(name, params_.size());
  params_.push_back({std::move(name), std::move(value), std::move(init), trainable});
  return params_.size() - 1;
}

bool ParamStore::contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

std::size_t ParamStore::index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter '" + std::string(name) + "'");
  return it->second;
}

std::size_t ParamStore::scalar_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (p.trainable || !trainable_only) n += p.value.size();
  return n;
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.params_.size() != b.params_.size()) return false;
  for (std::size_t i = 0; i < a.params_.size(); ++i) {
    const Param &p = a.params_[i], &q = b.params_[i];
    if (p.name != q.name || p.trainable != q.trainable || p.init != q.init) return false;
    if (p.value.shape() != q.value.shape()) return false;
    // Compare bit patterns so -0.0 and 0.0 differ.
    for (std::size_t k = 0; k < p.value.size(); ++k)
      if (std::bit_cast<std::uint64_t>(p.value[k]) != std::bit_cast<std::uint64_t>(q.value[k])) return false;
  }
  return true;
}

BoundParams::BoundParams(const ParamStore& store, Tape& tape, bool differentiable) : store_(&store), tape_(&tape) {
  vars_.reserve(store.size());
  for (const auto& p : store.params())
    vars_.push_back(p.trainable && differentiable ? tape.variable(p.value) : tape.constant(p.value));
}

}  // namespace hyres
