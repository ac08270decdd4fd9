#pragma once

#include "hyres/autodiff/ops.hpp"

#include <span>
#include <vector>

namespace hyres {

/// d(output)/d(wrt_i) as plain arrays. `output` must be 1 x 1. Inputs that do
/// not influence the output get zero arrays. The tape is left unchanged.
std::vector<Array> grad(const Var& output, std::span<const Var> wrt);

/// Same derivatives, recorded on the output's tape so they can be
/// differentiated again.
std::vector<Var> grad_graph(const Var& output, std::span<const Var> wrt);

/// Per-row derivatives d f_i / d input_{i, c} for every column c, for a batched
/// scalar field f (N x 1) computed row by row from input (N x d). Recorded.
Var input_gradient(const Var& f, const Var& input);

/// Column `col` of input_gradient(f, input).
Var jacobian_column(const Var& f, const Var& input, std::size_t col);

}  // namespace hyres
