#pragma once
// Reverse-mode differentiation record.
//
// A Tape is an append-only list of operation records in topological order.
// Vars are (tape, index) handles. A backward pass with graph recording appends
// its adjoint computations to the same tape, so derivatives of derivatives are
// obtained by differentiating again (reverse-over-reverse).

#include "hyres/autodiff/array.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <deque>
#include <vector>

namespace hyres {

enum class OpKind : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  Neg,
  Scale,
  Shift,
  PowInt,
  Tanh,
  Sigmoid,
  Exp,
  Sin,
  Cos,
  WendlandQ,
  TanhGrad,
  SigmoidGrad,
  AddRow,
  MulRow,
  MulCol,
  TileRows,
  TileCols,
  Fill,
  Sum,
  ColSum,
  RowSum,
  MatMul,
  SliceCols,
  PadCols,
  ConcatCols,
  SqDist,
};

std::string_view op_name(OpKind op);

struct Node {
  OpKind op = OpKind::Leaf;
  std::uint8_t arity = 0;
  bool requires_grad = false;
  std::array<std::size_t, 2> inputs{};
  // Op attributes: integer exponent / derivative order, column ranges, transposes.
  std::array<std::int64_t, 2> iattr{};
  double dattr = 0.0;
  Array value;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool attached() const { return tape_ != nullptr; }
  Tape& tape() const;
  std::size_t id() const { return id_; }
  const Array& value() const;
  bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Shape shape() const { return value().shape(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable leaf.
  Var variable(Array value);
  /// Leaf that never receives a gradient.
  Var constant(Array value);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  /// Drops every record at index >= n. Vars pointing there become invalid.
  void truncate(std::size_t n);
  void clear() { nodes_.clear(); }

  /// Appends an operation record; throws NumericError on non-finite values.
  Var record(OpKind op, std::initializer_list<Var> inputs, Array value, std::array<std::int64_t, 2> iattr = {},
             double dattr = 0.0);

 private:
  // deque: node references stay valid while records are appended.
  std::deque<Node> nodes_;
};

}  // namespace hyres
