#pragma once
// Recorded (differentiable) counterparts of the Array kernels in array.hpp.

#include "hyres/autodiff/tape.hpp"

namespace hyres {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double c);
Var shift(const Var& a, double c);
Var pow_int(const Var& a, int n);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
Var sin(const Var& a);
Var cos(const Var& a);
Var wendland_q(const Var& q, int k);
Var tanh_grad(const Var& g, const Var& y);
Var sigmoid_grad(const Var& g, const Var& y);

Var add_row(const Var& a, const Var& row);
Var mul_row(const Var& a, const Var& row);
Var mul_col(const Var& a, const Var& col);
Var tile_rows(const Var& row, std::size_t n);
Var tile_cols(const Var& col, std::size_t m);
Var fill(const Var& s, std::size_t rows, std::size_t cols);

Var sum(const Var& a);
Var colsum(const Var& a);
Var rowsum(const Var& a);
/// Mean of all entries.
Var mean(const Var& a);

Var matmul(const Var& a, const Var& b, bool ta = false, bool tb = false);
Var slice_cols(const Var& a, std::size_t c0, std::size_t c1);
Var col(const Var& a, std::size_t c);
Var pad_cols(const Var& a, std::size_t total, std::size_t offset);
Var concat_cols(const Var& a, const Var& b);
/// Squared distances from rows of a to rows of a constant center set c.
Var sqdist(const Var& a, const Var& c);

/// Wendland C4 kernel of distances r (N x M) with per-column support tau (1 x M);
/// differentiable in both arguments.
Var wendland_c4(const Var& r, const Var& tau);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator-(const Var& a) { return neg(a); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }
inline Var operator*(const Var& a, double c) { return scale(a, c); }
inline Var operator+(const Var& a, double c) { return shift(a, c); }
inline Var operator-(const Var& a, double c) { return shift(a, -c); }

}  // namespace hyres
