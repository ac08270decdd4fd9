#include "hyres/autodiff/array.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>

#if defined(HYRES_HAVE_MVEC) && defined(__AVX2__)
#include <immintrin.h>
extern "C" __m256d _ZGVdN4v_sin(__m256d);
extern "C" __m256d _ZGVdN4v_cos(__m256d);
#endif

namespace hyres {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_eigen(const Array& a) {
  return ConstMap(a.ptr(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
}

MutMap as_eigen(Array& a) {
  return MutMap(a.ptr(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
}

[[noreturn]] void shape_fail(const char* op, const Array& a, const Array& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a.shape()) + " and " +
                   to_string(b.shape()));
}

template <class F>
Array unary(const Array& a, F f) {
  Array out(a.rows(), a.cols());
  const double* src = a.ptr();
  double* dst = out.ptr();
  for (std::size_t i = 0; i < a.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <class F>
Array binary(const char* op, const Array& a, const Array& b, F f) {
  if (a.shape() == b.shape()) {
    Array out(a.rows(), a.cols());
    const double* pa = a.ptr();
    const double* pb = b.ptr();
    double* dst = out.ptr();
    for (std::size_t i = 0; i < a.size(); ++i) dst[i] = f(pa[i], pb[i]);
    return out;
  }
  if (b.is_scalar()) {
    const double s = b[0];
    return unary(a, [&](double x) { return f(x, s); });
  }
  if (a.is_scalar()) {
    const double s = a[0];
    return unary(b, [&](double x) { return f(s, x); });
  }
  shape_fail(op, a, b);
}

// Wendland C4 profile as a Laurent polynomial in s = sqrt(q), valid on [0, 1).
// D = (1 / 2s) d/ds maps s^n to (n / 2) s^(n - 2), i.e. one q-derivative.
struct Laurent {
  int lowest = 0;               // exponent of coeffs[0]
  std::vector<double> coeffs;  // ascending exponents

  double eval(double s) const {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * s + coeffs[i];
    return acc * std::pow(s, lowest);
  }

  Laurent derive_q() const {
    Laurent out;
    out.lowest = lowest - 2;
    out.coeffs.resize(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      const int n = lowest + static_cast<int>(i);
      out.coeffs[i] = 0.5 * n * coeffs[i];
    }
    return out;
  }
};

const std::vector<Laurent>& wendland_table() {
  static const std::vector<Laurent> table = [] {
    // (1 - s)^6 (35 s^2 + 18 s + 3) expanded.
    std::vector<double> one_minus{1.0};
    for (int i = 0; i < 6; ++i) {
      std::vector<double> next(one_minus.size() + 1, 0.0);
      for (std::size_t j = 0; j < one_minus.size(); ++j) {
        next[j] += one_minus[j];
        next[j + 1] -= one_minus[j];
      }
      one_minus = std::move(next);
    }
    const double quad[3] = {3.0, 18.0, 35.0};
    Laurent base;
    base.coeffs.assign(one_minus.size() + 2, 0.0);
    for (std::size_t j = 0; j < one_minus.size(); ++j)
      for (std::size_t k = 0; k < 3; ++k) base.coeffs[j + k] += one_minus[j] * quad[k];
    std::vector<Laurent> t{base};
    for (int k = 1; k <= 12; ++k) t.push_back(t.back().derive_q());
    return t;
  }();
  return table;
}

// Smallest s used for derivative orders with negative powers of s. Those orders
// are singular only at exact center coincidence, a measure-zero event.
constexpr double kMinS = 1e-8;

double wendland_q_scalar(double q, int k) {
  const double s = std::sqrt(std::max(q, 0.0));
  if (s >= 1.0) return 0.0;
  const double w = 1.0 - s;
  switch (k) {
    case 0: {
      const double w2 = w * w;
      return w2 * w2 * w2 * (35.0 * s * s + 18.0 * s + 3.0);
    }
    case 1: {
      const double w2 = w * w;
      return -28.0 * (5.0 * s + 1.0) * w2 * w2 * w;
    }
    case 2: {
      const double w2 = w * w;
      return 420.0 * w2 * w2;
    }
    default: {
      const auto& table = wendland_table();
      if (k >= static_cast<int>(table.size()))
        throw std::out_of_range("wendland_q: derivative order too high");
      return table[static_cast<std::size_t>(k)].eval(std::max(s, kMinS));
    }
  }
}

}  // namespace

std::string to_string(const Shape& s) {
  std::ostringstream os;
  os << '[' << s[0] << 'x' << s[1] << ']';
  return os.str();
}

Array::Array(std::size_t rows, std::size_t cols, double fill_value)
    : rows_(rows), cols_(cols), data_(rows * cols, fill_value) {}

Array::Array(std::size_t rows, std::size_t cols, const std::vector<double>& data)
    : rows_(rows), cols_(cols), data_(data.begin(), data.end()) {
  if (data_.size() != rows_ * cols_)
    throw ShapeError("Array: data length " + std::to_string(data_.size()) + " does not match shape " +
                     to_string(shape()));
}

Array::Array(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Array: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Array Array::column(std::span<const double> values) {
  return Array(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Array Array::row(std::span<const double> values) {
  return Array(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

double Array::item() const {
  if (!is_scalar()) throw ShapeError("item: expected a 1x1 array, got " + to_string(shape()));
  return data_[0];
}

bool Array::all_finite() const {
  // v - v is 0 for finite v and NaN otherwise.
  const auto x = Eigen::Map<const Eigen::ArrayXd>(data_.data(), static_cast<Eigen::Index>(data_.size()));
  return (x - x).sum() == 0.0;
}

Array Array::row_range(std::size_t r0, std::size_t r1) const {
  if (r0 > r1 || r1 > rows_) throw std::out_of_range("row_range");
  Array out(r1 - r0, cols_);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(r0 * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>(r1 * cols_), out.data_.begin());
  return out;
}

std::vector<double> Array::col_values(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Array& Array::operator+=(const Array& other) {
  if (shape() != other.shape()) shape_fail("+=", *this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Array add(const Array& a, const Array& b) {
  return binary("add", a, b, [](double x, double y) { return x + y; });
}
Array sub(const Array& a, const Array& b) {
  return binary("sub", a, b, [](double x, double y) { return x - y; });
}
Array mul(const Array& a, const Array& b) {
  return binary("mul", a, b, [](double x, double y) { return x * y; });
}
Array neg(const Array& a) { return unary(a, [](double x) { return -x; }); }
Array scale(const Array& a, double c) { return unary(a, [c](double x) { return c * x; }); }
Array shift(const Array& a, double c) { return unary(a, [c](double x) { return x + c; }); }

Array pow_int(const Array& a, int n) {
  switch (n) {
    case 0: return Array(a.rows(), a.cols(), 1.0);
    case 1: return a;
    case 2: return unary(a, [](double x) { return x * x; });
    case 3: return unary(a, [](double x) { return x * x * x; });
    case -1: return unary(a, [](double x) { return 1.0 / x; });
    case -2: return unary(a, [](double x) { return 1.0 / (x * x); });
    default: return unary(a, [n](double x) { return std::pow(x, n); });
  }
}

Array tanh(const Array& a) {
  // 1 - 2 / (exp(2x) + 1) with vectorized exp; a Taylor polynomial near 0
  // avoids the cancellation there.
  Array out(a.rows(), a.cols());
  const auto n = static_cast<Eigen::Index>(a.size());
  const auto x = Eigen::Map<const Eigen::ArrayXd>(a.ptr(), n);
  Eigen::Map<Eigen::ArrayXd>(out.ptr(), n) = (2.0 * x.cwiseMax(-20.0).cwiseMin(20.0)).exp();
  const double* src = a.ptr();
  double* dst = out.ptr();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = src[i], v2 = v * v;
    const double poly = v * (1.0 + v2 * (-1.0 / 3.0 + v2 * (2.0 / 15.0 + v2 * (-17.0 / 315.0 + v2 * (62.0 / 2835.0)))));
    const double far = 1.0 - 2.0 / (dst[i] + 1.0);
    dst[i] = std::abs(v) < 1e-2 ? poly : far;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (src[i] != src[i]) dst[i] = src[i];
  return out;
}
Array sigmoid(const Array& a) {
  return unary(a, [](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
}
Array exp(const Array& a) { return unary(a, [](double x) { return std::exp(x); }); }
namespace {

// Four lanes at a time through glibc's vector math library when available.
template <class Vec, class Scalar>
Array trig(const Array& a, [[maybe_unused]] Vec vec, Scalar scalar) {
  Array out(a.rows(), a.cols());
  const double* src = a.ptr();
  double* dst = out.ptr();
  std::size_t i = 0;
#if defined(HYRES_HAVE_MVEC) && defined(__AVX2__)
  for (; i + 4 <= a.size(); i += 4) _mm256_storeu_pd(dst + i, vec(_mm256_loadu_pd(src + i)));
#endif
  for (; i < a.size(); ++i) dst[i] = scalar(src[i]);
  return out;
}

}  // namespace

#if defined(HYRES_HAVE_MVEC) && defined(__AVX2__)
Array sin(const Array& a) { return trig(a, _ZGVdN4v_sin, [](double x) { return std::sin(x); }); }
Array cos(const Array& a) { return trig(a, _ZGVdN4v_cos, [](double x) { return std::cos(x); }); }
#else
Array sin(const Array& a) { return trig(a, 0, [](double x) { return std::sin(x); }); }
Array cos(const Array& a) { return trig(a, 0, [](double x) { return std::cos(x); }); }
#endif

Array wendland_q(const Array& q, int k) {
  if (k < 0) throw std::invalid_argument("wendland_q: negative derivative order");
  if (k > 2) return unary(q, [k](double x) { return wendland_q_scalar(x, k); });
  // Closed forms of the low orders; w = max(1 - s, 0) vanishes off support.
  Array out(q.rows(), q.cols());
  const double* src = q.ptr();
  double* dst = out.ptr();
  const std::size_t n = q.size();
  if (k == 0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = std::sqrt(src[i] < 0.0 ? 0.0 : src[i]);
      const double w = s < 1.0 ? 1.0 - s : 0.0, w2 = w * w;
      dst[i] = w2 * w2 * w2 * (35.0 * s * s + 18.0 * s + 3.0);
    }
  } else if (k == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = std::sqrt(src[i] < 0.0 ? 0.0 : src[i]);
      const double w = s < 1.0 ? 1.0 - s : 0.0, w2 = w * w;
      dst[i] = -28.0 * (5.0 * s + 1.0) * w2 * w2 * w;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = std::sqrt(src[i] < 0.0 ? 0.0 : src[i]);
      const double w = s < 1.0 ? 1.0 - s : 0.0, w2 = w * w;
      dst[i] = 420.0 * w2 * w2;
    }
  }
  return out;
}

Array tanh_grad(const Array& g, const Array& y) {
  return binary("tanh_grad", g, y, [](double gv, double yv) { return gv * (1.0 - yv * yv); });
}

Array sigmoid_grad(const Array& g, const Array& y) {
  return binary("sigmoid_grad", g, y, [](double gv, double yv) { return gv * yv * (1.0 - yv); });
}

Array add_row(const Array& a, const Array& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) shape_fail("add_row", a, row);
  Array out = a;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) += row[c];
  return out;
}

Array mul_row(const Array& a, const Array& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) shape_fail("mul_row", a, row);
  Array out = a;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) *= row[c];
  return out;
}

Array mul_col(const Array& a, const Array& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) shape_fail("mul_col", a, col);
  Array out = a;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) *= col[r];
  return out;
}

Array tile_rows(const Array& row, std::size_t n) {
  if (row.rows() != 1) throw ShapeError("tile_rows: expected a row vector, got " + to_string(row.shape()));
  Array out(n, row.cols());
  for (std::size_t r = 0; r < n; ++r) std::copy(row.ptr(), row.ptr() + row.cols(), out.ptr() + r * row.cols());
  return out;
}

Array tile_cols(const Array& col, std::size_t m) {
  if (col.cols() != 1) throw ShapeError("tile_cols: expected a column vector, got " + to_string(col.shape()));
  Array out(col.rows(), m);
  for (std::size_t r = 0; r < col.rows(); ++r)
    std::fill(out.ptr() + r * m, out.ptr() + (r + 1) * m, col[r]);
  return out;
}

Array fill(const Array& s, std::size_t rows, std::size_t cols) { return Array(rows, cols, s.item()); }

Array sum(const Array& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  return Array::scalar(acc);
}

Array colsum(const Array& a) {
  Array out(1, a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out[c] += a(r, c);
  return out;
}

Array rowsum(const Array& a) {
  Array out(a.rows(), 1);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) acc += a(r, c);
    out[r] = acc;
  }
  return out;
}

Array matmul(const Array& a, const Array& b, bool ta, bool tb) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t ka = ta ? a.rows() : a.cols();
  const std::size_t kb = tb ? b.cols() : b.rows();
  const std::size_t n = tb ? b.rows() : b.cols();
  if (ka != kb) shape_fail("matmul", a, b);
  Array out(m, n);
  if (m == 0 || n == 0) return out;
  if (ka == 0) return out;
  auto ea = as_eigen(a);
  auto eb = as_eigen(b);
  auto eo = as_eigen(out);
  if (!ta && !tb) eo.noalias() = ea * eb;
  else if (ta && !tb) eo.noalias() = ea.transpose() * eb;
  else if (!ta && tb) eo.noalias() = ea * eb.transpose();
  else eo.noalias() = ea.transpose() * eb.transpose();
  return out;
}

Array slice_cols(const Array& a, std::size_t c0, std::size_t c1) {
  if (c0 > c1 || c1 > a.cols())
    throw ShapeError("slice_cols: range [" + std::to_string(c0) + ", " + std::to_string(c1) +
                     ") outside " + to_string(a.shape()));
  const std::size_t w = c1 - c0;
  Array out(a.rows(), w);
  for (std::size_t r = 0; r < a.rows(); ++r)
    std::copy(a.ptr() + r * a.cols() + c0, a.ptr() + r * a.cols() + c1, out.ptr() + r * w);
  return out;
}

Array pad_cols(const Array& a, std::size_t total, std::size_t offset) {
  if (offset + a.cols() > total)
    throw ShapeError("pad_cols: " + to_string(a.shape()) + " does not fit at offset " + std::to_string(offset) +
                     " in width " + std::to_string(total));
  Array out(a.rows(), total);
  for (std::size_t r = 0; r < a.rows(); ++r)
    std::copy(a.ptr() + r * a.cols(), a.ptr() + (r + 1) * a.cols(), out.ptr() + r * total + offset);
  return out;
}

Array concat_cols(const Array& a, const Array& b) {
  if (a.rows() != b.rows()) shape_fail("concat_cols", a, b);
  const std::size_t w = a.cols() + b.cols();
  Array out(a.rows(), w);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy(a.ptr() + r * a.cols(), a.ptr() + (r + 1) * a.cols(), out.ptr() + r * w);
    std::copy(b.ptr() + r * b.cols(), b.ptr() + (r + 1) * b.cols(), out.ptr() + r * w + a.cols());
  }
  return out;
}

Array sqdist(const Array& a, const Array& c) {
  if (a.cols() != c.cols()) shape_fail("sqdist", a, c);
  const std::size_t n = a.rows(), m = c.rows(), q = a.cols();
  Array out(n, m);
  if (q <= 4) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < q; ++k) {
          const double d = a(i, k) - c(j, k);
          acc += d * d;
        }
        out(i, j) = acc;
      }
    return out;
  }
  // |a|^2 + |c|^2 - 2 a c^T through GEMM; clamp the cancellation residue at zero.
  auto ea = as_eigen(a);
  auto ec = as_eigen(c);
  auto eo = as_eigen(out);
  eo.noalias() = -2.0 * ea * ec.transpose();
  const Eigen::VectorXd an = ea.rowwise().squaredNorm();
  const Eigen::VectorXd cn = ec.rowwise().squaredNorm();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out(i, j) = std::max(0.0, out(i, j) + an[i] + cn[j]);
  return out;
}

Array wendland_c4(const Array& r, const Array& tau) {
  if (tau.rows() != 1 || tau.cols() != r.cols()) shape_fail("wendland_c4", r, tau);
  for (double t : tau.data())
    if (!(t > 0.0)) throw std::invalid_argument("wendland_c4: support radius tau must be positive");
  Array out(r.rows(), r.cols());
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t j = 0; j < r.cols(); ++j) {
      const double s = r(i, j) / tau[j];
      out(i, j) = wendland_q_scalar(s * s, 0);
    }
  return out;
}

}  // namespace hyres
