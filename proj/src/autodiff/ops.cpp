#include "hyres/autodiff/ops.hpp"

#include <stdexcept>
#include <string>

namespace hyres {

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Neg: return "neg";
    case OpKind::Scale: return "scale";
    case OpKind::Shift: return "shift";
    case OpKind::PowInt: return "pow_int";
    case OpKind::Tanh: return "tanh";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Exp: return "exp";
    case OpKind::Sin: return "sin";
    case OpKind::Cos: return "cos";
    case OpKind::WendlandQ: return "wendland_q";
    case OpKind::TanhGrad: return "tanh_grad";
    case OpKind::SigmoidGrad: return "sigmoid_grad";
    case OpKind::AddRow: return "add_row";
    case OpKind::MulRow: return "mul_row";
    case OpKind::MulCol: return "mul_col";
    case OpKind::TileRows: return "tile_rows";
    case OpKind::TileCols: return "tile_cols";
    case OpKind::Fill: return "fill";
    case OpKind::Sum: return "sum";
    case OpKind::ColSum: return "colsum";
    case OpKind::RowSum: return "rowsum";
    case OpKind::MatMul: return "matmul";
    case OpKind::SliceCols: return "slice_cols";
    case OpKind::PadCols: return "pad_cols";
    case OpKind::ConcatCols: return "concat_cols";
    case OpKind::SqDist: return "sqdist";
  }
  return "?";
}

Tape& Var::tape() const {
  if (!tape_) throw std::logic_error("Var is not attached to a tape");
  return *tape_;
}

const Array& Var::value() const { return tape().node(id_).value; }

bool Var::requires_grad() const { return tape().node(id_).requires_grad; }

Var Tape::variable(Array value) {
  if (!value.all_finite()) throw NumericError("variable: non-finite leaf value " + to_string(value.shape()));
  Node n;
  n.op = OpKind::Leaf;
  n.requires_grad = true;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Array value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite leaf value " + to_string(value.shape()));
  Node n;
  n.op = OpKind::Leaf;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::truncate(std::size_t n) {
  if (n < nodes_.size()) nodes_.resize(n);
}

Var Tape::record(OpKind op, std::initializer_list<Var> inputs, Array value, std::array<std::int64_t, 2> iattr,
                 double dattr) {
  Node n;
  n.op = op;
  n.arity = static_cast<std::uint8_t>(inputs.size());
  std::size_t k = 0;
  for (const Var& v : inputs) {
    if (&v.tape() != this) throw std::logic_error(std::string(op_name(op)) + ": operand recorded on another tape");
    n.inputs[k++] = v.id();
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  if (!value.all_finite()) {
    std::string msg = std::string(op_name(op)) + ": non-finite result";
    for (const Var& v : inputs) msg += " " + to_string(v.shape());
    throw NumericError(msg);
  }
  n.iattr = iattr;
  n.dattr = dattr;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

namespace {

Tape& same_tape(const Var& a, const Var& b) {
  Tape& t = a.tape();
  if (&b.tape() != &t) throw std::logic_error("operands recorded on different tapes");
  return t;
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return same_tape(a, b).record(OpKind::Add, {a, b}, add(a.value(), b.value()));
}
Var sub(const Var& a, const Var& b) {
  return same_tape(a, b).record(OpKind::Sub, {a, b}, sub(a.value(), b.value()));
}
Var mul(const Var& a, const Var& b) {
  return same_tape(a, b).record(OpKind::Mul, {a, b}, mul(a.value(), b.value()));
}
Var neg(const Var& a) { return a.tape().record(OpKind::Neg, {a}, neg(a.value())); }
Var scale(const Var& a, double c) { return a.tape().record(OpKind::Scale, {a}, scale(a.value(), c), {}, c); }
Var shift(const Var& a, double c) { return a.tape().record(OpKind::Shift, {a}, shift(a.value(), c), {}, c); }
Var pow_int(const Var& a, int n) {
  return a.tape().record(OpKind::PowInt, {a}, pow_int(a.value(), n), {n, 0});
}
Var tanh(const Var& a) { return a.tape().record(OpKind::Tanh, {a}, tanh(a.value())); }
Var sigmoid(const Var& a) { return a.tape().record(OpKind::Sigmoid, {a}, sigmoid(a.value())); }
Var exp(const Var& a) { return a.tape().record(OpKind::Exp, {a}, exp(a.value())); }
Var sin(const Var& a) { return a.tape().record(OpKind::Sin, {a}, sin(a.value())); }
Var cos(const Var& a) { return a.tape().record(OpKind::Cos, {a}, cos(a.value())); }
Var wendland_q(const Var& q, int k) {
  return q.tape().record(OpKind::WendlandQ, {q}, wendland_q(q.value(), k), {k, 0});
}
Var tanh_grad(const Var& g, const Var& y) {
  return same_tape(g, y).record(OpKind::TanhGrad, {g, y}, tanh_grad(g.value(), y.value()));
}
Var sigmoid_grad(const Var& g, const Var& y) {
  return same_tape(g, y).record(OpKind::SigmoidGrad, {g, y}, sigmoid_grad(g.value(), y.value()));
}

Var add_row(const Var& a, const Var& row) {
  return same_tape(a, row).record(OpKind::AddRow, {a, row}, add_row(a.value(), row.value()));
}
Var mul_row(const Var& a, const Var& row) {
  return same_tape(a, row).record(OpKind::MulRow, {a, row}, mul_row(a.value(), row.value()));
}
Var mul_col(const Var& a, const Var& c) {
  return same_tape(a, c).record(OpKind::MulCol, {a, c}, mul_col(a.value(), c.value()));
}
Var tile_rows(const Var& row, std::size_t n) {
  return row.tape().record(OpKind::TileRows, {row}, tile_rows(row.value(), n), {static_cast<std::int64_t>(n), 0});
}
Var tile_cols(const Var& c, std::size_t m) {
  return c.tape().record(OpKind::TileCols, {c}, tile_cols(c.value(), m), {static_cast<std::int64_t>(m), 0});
}
Var fill(const Var& s, std::size_t rows, std::size_t cols) {
  return s.tape().record(OpKind::Fill, {s}, fill(s.value(), rows, cols),
                         {static_cast<std::int64_t>(rows), static_cast<std::int64_t>(cols)});
}

Var sum(const Var& a) { return a.tape().record(OpKind::Sum, {a}, sum(a.value())); }
Var colsum(const Var& a) { return a.tape().record(OpKind::ColSum, {a}, colsum(a.value())); }
Var rowsum(const Var& a) { return a.tape().record(OpKind::RowSum, {a}, rowsum(a.value())); }
Var mean(const Var& a) {
  if (a.value().size() == 0) throw ShapeError("mean: empty operand");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var matmul(const Var& a, const Var& b, bool ta, bool tb) {
  return same_tape(a, b).record(OpKind::MatMul, {a, b}, matmul(a.value(), b.value(), ta, tb), {ta, tb});
}
Var slice_cols(const Var& a, std::size_t c0, std::size_t c1) {
  return a.tape().record(OpKind::SliceCols, {a}, slice_cols(a.value(), c0, c1),
                         {static_cast<std::int64_t>(c0), static_cast<std::int64_t>(c1)});
}
Var col(const Var& a, std::size_t c) { return slice_cols(a, c, c + 1); }
Var pad_cols(const Var& a, std::size_t total, std::size_t offset) {
  return a.tape().record(OpKind::PadCols, {a}, pad_cols(a.value(), total, offset),
                         {static_cast<std::int64_t>(total), static_cast<std::int64_t>(offset)});
}
Var concat_cols(const Var& a, const Var& b) {
  return same_tape(a, b).record(OpKind::ConcatCols, {a, b}, concat_cols(a.value(), b.value()));
}
Var sqdist(const Var& a, const Var& c) {
  if (c.requires_grad()) throw std::logic_error("sqdist: center set must be a constant");
  return same_tape(a, c).record(OpKind::SqDist, {a, c}, sqdist(a.value(), c.value()));
}

Var wendland_c4(const Var& r, const Var& tau) {
  if (tau.rows() != 1 || tau.cols() != r.cols())
    throw ShapeError("wendland_c4: tau " + to_string(tau.shape()) + " does not match distances " +
                     to_string(r.shape()));
  for (double t : tau.value().data())
    if (!(t > 0.0)) throw std::invalid_argument("wendland_c4: support radius tau must be positive");
  return wendland_q(mul_row(pow_int(r, 2), pow_int(tau, -2)), 0);
}

}  // namespace hyres
