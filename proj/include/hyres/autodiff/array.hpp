#pragma once
// Dense row-major 2D array of doubles and the eager kernels that operate on it.
//
// Every quantity in the engine is a matrix: N x m fields, 1 x m row vectors,
// N x 1 column fields and 1 x 1 scalars. The same operation names exist for
// Var (recorded, see ops.hpp), which lets the backward rules be written once.

#include <array>
#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyres {

/// Raised when an operation produces NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on incompatible operand shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Shape = std::array<std::size_t, 2>;

/// 64-byte aligned allocation: vectorized kernels then split every buffer the
/// same way, so results do not depend on where an array happens to live.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) { return true; }
};

std::string to_string(const Shape& s);

class Array {
 public:
  Array() = default;
  Array(std::size_t rows, std::size_t cols, double fill = 0.0);
  Array(std::size_t rows, std::size_t cols, const std::vector<double>& data);
  /// Row-wise nested initializer, e.g. Array{{1, 2}, {3, 4}}.
  Array(std::initializer_list<std::initializer_list<double>> rows);

  static Array scalar(double v) { return Array(1, 1, v); }
  static Array zeros(std::size_t rows, std::size_t cols) { return Array(rows, cols, 0.0); }
  static Array ones(std::size_t rows, std::size_t cols) { return Array(rows, cols, 1.0); }
  static Array column(std::span<const double> values);
  static Array row(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  Shape shape() const { return {rows_, cols_}; }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
  bool empty() const { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  /// Value of a 1 x 1 array.
  double item() const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  const double* ptr() const { return data_.data(); }
  double* ptr() { return data_.data(); }

  bool all_finite() const;
  /// Copy of rows [r0, r1).
  Array row_range(std::size_t r0, std::size_t r1) const;
  std::vector<double> col_values(std::size_t c) const;

  Array& operator+=(const Array& other);

  friend bool operator==(const Array& a, const Array& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double, AlignedAllocator<double>> data_;
};

// ---------------------------------------------------------------------------
// Eager kernels. Binary elementwise ops accept equal shapes or one 1 x 1 side.

Array add(const Array& a, const Array& b);
Array sub(const Array& a, const Array& b);
Array mul(const Array& a, const Array& b);
Array neg(const Array& a);
Array scale(const Array& a, double c);
Array shift(const Array& a, double c);
Array pow_int(const Array& a, int n);
Array tanh(const Array& a);
Array sigmoid(const Array& a);
Array exp(const Array& a);
Array sin(const Array& a);
Array cos(const Array& a);
/// k-th derivative, with respect to q = (r/tau)^2, of the Wendland C4 profile.
Array wendland_q(const Array& q, int k);
/// g * (1 - y^2)
Array tanh_grad(const Array& g, const Array& y);
/// g * y * (1 - y)
Array sigmoid_grad(const Array& g, const Array& y);

Array add_row(const Array& a, const Array& row);
Array mul_row(const Array& a, const Array& row);
Array mul_col(const Array& a, const Array& col);
Array tile_rows(const Array& row, std::size_t n);
Array tile_cols(const Array& col, std::size_t m);
Array fill(const Array& s, std::size_t rows, std::size_t cols);

Array sum(const Array& a);
Array colsum(const Array& a);
Array rowsum(const Array& a);

/// op(a) * op(b), op = transpose when the flag is set.
Array matmul(const Array& a, const Array& b, bool ta = false, bool tb = false);
Array slice_cols(const Array& a, std::size_t c0, std::size_t c1);
Array pad_cols(const Array& a, std::size_t total, std::size_t offset);
Array concat_cols(const Array& a, const Array& b);
/// D(i, j) = ||a_i - c_j||^2 for rows of a (N x q) and c (M x q).
Array sqdist(const Array& a, const Array& c);

/// Wendland C4 kernel (1 - s)_+^6 (35 s^2 + 18 s + 3), s = r / tau_j, per column j.
Array wendland_c4(const Array& r, const Array& tau);

}  // namespace hyres
