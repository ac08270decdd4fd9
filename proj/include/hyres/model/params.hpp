#pragma once
// Named trainable arrays and their binding onto a tape.

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hyres/autodiff/ops.hpp"

namespace hyres {

struct Param {
  std::string name;
  Array value;
  std::string init;  // how the value was drawn, e.g. "glorot-normal"
  bool trainable = true;
};

class ParamStore {
 public:
  /// Appends a parameter; names must be unique. Returns its index.
  std::size_t add(std::string name, Array value, std::string init, bool trainable = true);

  bool contains(std::string_view name) const;
  std::size_t index(std::string_view name) const;
  std::size_t size() const { return params_.size(); }
  /// Total number of scalars, optionally only trainable ones.
  std::size_t scalar_count(bool trainable_only = true) const;

  const Param& at(std::size_t i) const { return params_.at(i); }
  Param& at(std::size_t i) { return params_.at(i); }
  const Param& at(std::string_view name) const { return params_[index(name)]; }
  Param& at(std::string_view name) { return params_[index(name)]; }
  const Array& value(std::string_view name) const { return at(name).value; }
  Array& value(std::string_view name) { return at(name).value; }
  const std::vector<Param>& params() const { return params_; }

  /// Bitwise equality of names, flags and values.
  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// A ParamStore snapshot recorded as tape leaves for one evaluation.
class BoundParams {
 public:
  /// Trainable parameters become variables when `differentiable`, constants
  /// otherwise.
  BoundParams(const ParamStore& store, Tape& tape, bool differentiable = true);

  const Var& operator()(std::string_view name) const { return vars_[store_->index(name)]; }
  const std::vector<Var>& vars() const { return vars_; }
  const ParamStore& store() const { return *store_; }
  Tape& tape() const { return *tape_; }

 private:
  const ParamStore* store_;
  Tape* tape_;
  std::vector<Var> vars_;
};

}  // namespace hyres
