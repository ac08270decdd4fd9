#include "hyres/autodiff/grad.hpp"

#include <optional>
#include <stdexcept>
#include <utility>

namespace hyres {

namespace {

// Backward rules, written once for both adjoint representations: Array (eager,
// nothing recorded) and Var (recorded, differentiable again).
template <class V>
V reduce_like(const V& g, const Shape& target) {
  if (g.shape() == target) return g;
  if (target == Shape{1, 1}) return sum(g);
  throw ShapeError("backward: cannot reduce " + to_string(g.shape()) + " to " + to_string(target));
}

template <class Ctx>
void backward_rule(Ctx& ctx, const Node& n, std::size_t id, const typename Ctx::V& g) {
  using V = typename Ctx::V;
  auto want = [&](int k) { return ctx.wants(n.inputs[static_cast<std::size_t>(k)]); };
  auto emit = [&](int k, V v) { ctx.accumulate(n.inputs[static_cast<std::size_t>(k)], std::move(v)); };
  auto shape_of = [&](int k) { return ctx.shape(n.inputs[static_cast<std::size_t>(k)]); };

  switch (n.op) {
    case OpKind::Leaf: return;
    case OpKind::Add:
      if (want(0)) emit(0, reduce_like(g, shape_of(0)));
      if (want(1)) emit(1, reduce_like(g, shape_of(1)));
      return;
    case OpKind::Sub:
      if (want(0)) emit(0, reduce_like(g, shape_of(0)));
      if (want(1)) emit(1, reduce_like(V(neg(g)), shape_of(1)));
      return;
    case OpKind::Mul: {
      const auto& a = ctx.in(n, 0);
      const auto& b = ctx.in(n, 1);
      if (want(0)) emit(0, reduce_like(V(mul(g, b)), shape_of(0)));
      if (want(1)) emit(1, reduce_like(V(mul(g, a)), shape_of(1)));
      return;
    }
    case OpKind::Neg:
      if (want(0)) emit(0, neg(g));
      return;
    case OpKind::Scale:
      if (want(0)) emit(0, scale(g, n.dattr));
      return;
    case OpKind::Shift:
      if (want(0)) emit(0, g);
      return;
    case OpKind::PowInt: {
      const int p = static_cast<int>(n.iattr[0]);
      if (!want(0) || p == 0) return;
      if (p == 1) {
        emit(0, g);
      } else if (p == 2) {
        emit(0, scale(mul(g, ctx.in(n, 0)), 2.0));
      } else {
        emit(0, mul(g, scale(pow_int(ctx.in(n, 0), p - 1), static_cast<double>(p))));
      }
      return;
    }
    case OpKind::Tanh:
      if (want(0)) emit(0, tanh_grad(g, ctx.out(id)));
      return;
    case OpKind::Sigmoid:
      if (want(0)) emit(0, sigmoid_grad(g, ctx.out(id)));
      return;
    case OpKind::Exp:
      if (want(0)) emit(0, mul(g, ctx.out(id)));
      return;
    case OpKind::Sin:
      if (want(0)) emit(0, mul(g, cos(ctx.in(n, 0))));
      return;
    case OpKind::Cos:
      if (want(0)) emit(0, neg(mul(g, sin(ctx.in(n, 0)))));
      return;
    case OpKind::WendlandQ:
      if (want(0)) emit(0, mul(g, wendland_q(ctx.in(n, 0), static_cast<int>(n.iattr[0]) + 1)));
      return;
    case OpKind::TanhGrad: {
      const auto& gin = ctx.in(n, 0);
      const auto& y = ctx.in(n, 1);
      if (want(0)) emit(0, tanh_grad(g, y));
      if (want(1)) emit(1, scale(mul(mul(g, gin), y), -2.0));
      return;
    }
    case OpKind::SigmoidGrad: {
      const auto& gin = ctx.in(n, 0);
      const auto& y = ctx.in(n, 1);
      if (want(0)) emit(0, sigmoid_grad(g, y));
      if (want(1)) emit(1, mul(mul(g, gin), shift(scale(y, -2.0), 1.0)));
      return;
    }
    case OpKind::AddRow:
      if (want(0)) emit(0, g);
      if (want(1)) emit(1, colsum(g));
      return;
    case OpKind::MulRow: {
      if (want(0)) emit(0, mul_row(g, ctx.in(n, 1)));
      if (want(1)) emit(1, colsum(mul(g, ctx.in(n, 0))));
      return;
    }
    case OpKind::MulCol: {
      if (want(0)) emit(0, mul_col(g, ctx.in(n, 1)));
      if (want(1)) emit(1, rowsum(mul(g, ctx.in(n, 0))));
      return;
    }
    case OpKind::TileRows:
      if (want(0)) emit(0, colsum(g));
      return;
    case OpKind::TileCols:
      if (want(0)) emit(0, rowsum(g));
      return;
    case OpKind::Fill:
      if (want(0)) emit(0, sum(g));
      return;
    case OpKind::Sum: {
      const Shape s = shape_of(0);
      if (want(0)) emit(0, fill(g, s[0], s[1]));
      return;
    }
    case OpKind::ColSum:
      if (want(0)) emit(0, tile_rows(g, shape_of(0)[0]));
      return;
    case OpKind::RowSum:
      if (want(0)) emit(0, tile_cols(g, shape_of(0)[1]));
      return;
    case OpKind::MatMul: {
      const bool ta = n.iattr[0] != 0;
      const bool tb = n.iattr[1] != 0;
      const auto& a = ctx.in(n, 0);
      const auto& b = ctx.in(n, 1);
      if (want(0)) {
        if (!ta) emit(0, matmul(g, b, false, !tb));
        else emit(0, matmul(b, g, tb, true));
      }
      if (want(1)) {
        if (!tb) emit(1, matmul(a, g, !ta, false));
        else emit(1, matmul(g, a, true, ta));
      }
      return;
    }
    case OpKind::SliceCols:
      if (want(0))
        emit(0, pad_cols(g, shape_of(0)[1], static_cast<std::size_t>(n.iattr[0])));
      return;
    case OpKind::PadCols: {
      const auto off = static_cast<std::size_t>(n.iattr[1]);
      if (want(0)) emit(0, slice_cols(g, off, off + shape_of(0)[1]));
      return;
    }
    case OpKind::ConcatCols: {
      const std::size_t wa = shape_of(0)[1];
      const std::size_t wb = shape_of(1)[1];
      if (want(0)) emit(0, slice_cols(g, 0, wa));
      if (want(1)) emit(1, slice_cols(g, wa, wa + wb));
      return;
    }
    case OpKind::SqDist: {
      // d/da_i sum_j G_ij |a_i - c_j|^2 = 2 (a_i sum_j G_ij - sum_j G_ij c_j)
      if (want(0)) {
        const auto& a = ctx.in(n, 0);
        const auto& c = ctx.in(n, 1);
        emit(0, scale(sub(mul_col(a, rowsum(g)), matmul(g, c)), 2.0));
      }
      return;
    }
  }
}

// Nodes in [0, out] that depend on any of the requested inputs.
std::vector<char> reach_mask(const Tape& tape, std::size_t out, std::span<const Var> wrt) {
  std::vector<char> reach(out + 1, 0);
  for (const Var& w : wrt)
    if (w.id() <= out) reach[w.id()] = 1;
  for (std::size_t i = 0; i <= out; ++i) {
    if (reach[i]) continue;
    const Node& n = tape.node(i);
    for (std::size_t k = 0; k < n.arity; ++k)
      if (reach[n.inputs[k]]) {
        reach[i] = 1;
        break;
      }
  }
  return reach;
}

void check_request(const Var& output, std::span<const Var> wrt) {
  if (!output.attached()) throw std::logic_error("grad: output is detached");
  if (!output.value().is_scalar())
    throw ShapeError("grad: output must be 1x1, got " + to_string(output.shape()));
  for (const Var& w : wrt) {
    if (!w.attached()) throw std::logic_error("grad: differentiation target is detached");
    if (&w.tape() != &output.tape()) throw std::logic_error("grad: target recorded on another tape");
  }
}

struct ArrayCtx {
  using V = Array;
  const Tape& tape;
  const std::vector<char>& reach;
  std::vector<std::optional<Array>> adj;

  bool wants(std::size_t i) const { return reach[i] != 0; }
  Shape shape(std::size_t i) const { return tape.node(i).value.shape(); }
  const Array& in(const Node& n, int k) const { return tape.node(n.inputs[static_cast<std::size_t>(k)]).value; }
  const Array& out(std::size_t id) const { return tape.node(id).value; }
  void accumulate(std::size_t i, Array v) {
    if (!v.all_finite()) throw NumericError("grad: non-finite adjoint");
    if (adj[i]) *adj[i] += v;
    else adj[i] = std::move(v);
  }
};

struct VarCtx {
  using V = Var;
  Tape& tape;
  const std::vector<char>& reach;
  std::vector<std::optional<Var>> adj;

  bool wants(std::size_t i) const { return reach[i] != 0; }
  Shape shape(std::size_t i) const { return tape.node(i).value.shape(); }
  Var in(const Node& n, int k) const { return Var(&tape, n.inputs[static_cast<std::size_t>(k)]); }
  Var out(std::size_t id) const { return Var(&tape, id); }
  void accumulate(std::size_t i, Var v) {
    if (adj[i]) adj[i] = add(*adj[i], v);
    else adj[i] = v;
  }
};

}  // namespace

std::vector<Array> grad(const Var& output, std::span<const Var> wrt) {
  check_request(output, wrt);
  const Tape& tape = output.tape();
  const std::size_t out = output.id();
  const auto reach = reach_mask(tape, out, wrt);

  // Inputs that are themselves differentiation targets keep their adjoint.
  std::vector<char> keep(out + 1, 0);
  for (const Var& w : wrt)
    if (w.id() <= out) keep[w.id()] = 1;

  ArrayCtx ctx{tape, reach, std::vector<std::optional<Array>>(out + 1)};
  if (reach[out]) ctx.adj[out] = Array::scalar(1.0);
  for (std::size_t i = out + 1; i-- > 0;) {
    if (!ctx.adj[i]) continue;
    const Node& n = tape.node(i);
    if (n.op != OpKind::Leaf) {
      backward_rule(ctx, n, i, *ctx.adj[i]);
      if (!keep[i]) ctx.adj[i].reset();
    }
  }

  std::vector<Array> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    if (w.id() <= out && ctx.adj[w.id()]) result.push_back(*ctx.adj[w.id()]);
    else result.push_back(Array::zeros(w.rows(), w.cols()));
  }
  return result;
}

std::vector<Var> grad_graph(const Var& output, std::span<const Var> wrt) {
  check_request(output, wrt);
  Tape& tape = output.tape();
  const std::size_t out = output.id();
  const auto reach = reach_mask(tape, out, wrt);

  VarCtx ctx{tape, reach, std::vector<std::optional<Var>>(out + 1)};
  if (reach[out]) ctx.adj[out] = tape.constant(Array::scalar(1.0));
  for (std::size_t i = out + 1; i-- > 0;) {
    if (!ctx.adj[i]) continue;
    const Node& n = tape.node(i);
    if (n.op != OpKind::Leaf) backward_rule(ctx, n, i, *ctx.adj[i]);
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    if (w.id() <= out && ctx.adj[w.id()]) result.push_back(*ctx.adj[w.id()]);
    else result.push_back(tape.constant(Array::zeros(w.rows(), w.cols())));
  }
  return result;
}

Var input_gradient(const Var& f, const Var& input) {
  if (f.cols() != 1) throw ShapeError("input_gradient: expected an N x 1 field, got " + to_string(f.shape()));
  if (f.rows() != input.rows())
    throw ShapeError("input_gradient: field " + to_string(f.shape()) + " and input " + to_string(input.shape()) +
                     " disagree on row count");
  const Var target[] = {input};
  return grad_graph(sum(f), target)[0];
}

Var jacobian_column(const Var& f, const Var& input, std::size_t c) {
  if (c >= input.cols())
    throw std::out_of_range("jacobian_column: column " + std::to_string(c) + " out of range for input " +
                            to_string(input.shape()));
  return col(input_gradient(f, input), c);
}

}  // namespace hyres
