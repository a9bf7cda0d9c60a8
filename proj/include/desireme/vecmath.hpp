#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "desireme/errors.hpp"

namespace desireme {

/// Dense real vector. All numerical modules are templated on the scalar type:
/// `float` for training and inference, `double` for gradient checking.
template <class T>
class Vector {
 public:
  using value_type = T;

  Vector() = default;
  explicit Vector(std::size_t dim, T fill = T(0)) : data_(dim, fill) {}
  Vector(std::initializer_list<T> values) : data_(values) {}
  explicit Vector(std::vector<T> values) : data_(std::move(values)) {}
  explicit Vector(std::span<const T> values) : data_(values.begin(), values.end()) {}

  std::size_t dim() const { return data_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  Vector& operator+=(const Vector& other) {
    require(other.dim() == dim(), "vector dimension mismatch in +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  Vector& operator-=(const Vector& other) {
    require(other.dim() == dim(), "vector dimension mismatch in -=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
  }

  Vector& operator*=(T factor) {
    for (T& v : data_) v *= factor;
    return *this;
  }

  friend Vector operator+(Vector a, const Vector& b) { return a += b; }
  friend Vector operator-(Vector a, const Vector& b) { return a -= b; }
  friend Vector operator*(T s, Vector a) { return a *= s; }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<T> data_;
};

/// Row-major dense matrix.
template <class T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> values)
      : rows_(rows), cols_(cols), data_(std::move(values)) {
    require(data_.size() == rows * cols, "matrix data length does not match rows*cols");
  }
  Matrix(std::initializer_list<std::initializer_list<T>> rows) : rows_(rows.size()) {
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      require(row.size() == cols_, "ragged matrix initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Counter-based generator: output n is splitmix64(seed + n * golden_gamma).
/// The sequence is a pure function of (seed, n) and therefore identical on
/// every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    ++counter_;
    return mix(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Independent generator for a named sub-stream (init, shuffling, noise...).
  Rng derive(std::uint64_t stream) const {
    return Rng(mix(seed_ ^ mix(stream + 0x632BE59BD9B4E019ULL)));
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (one draw per call, no cached spare).
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n), unbiased by rejection.
  std::uint64_t below(std::uint64_t n) {
    require(n > 0, "Rng::below requires n > 0");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates with the in-repo generator (std::shuffle is not portable).
template <class Container>
void shuffle(Container& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

enum class Activation { relu, sigmoid };

template <class T>
T relu(T z) {
  return z > T(0) ? z : T(0);
}

/// Logistic function, clamped so the result stays inside the open interval
/// (0, 1) even where the scalar type would round to 0 or 1.
template <class T>
T sigmoid(T z) {
  T s;
  if (z >= T(0)) {
    s = T(1) / (T(1) + std::exp(-z));
  } else {
    const T e = std::exp(z);
    s = e / (T(1) + e);
  }
  constexpr T lo = std::numeric_limits<T>::denorm_min();
  const T hi = std::nextafter(T(1), T(0));
  return std::clamp(s, lo, hi);
}

template <class T>
Vector<T> elementwise(Vector<T> v, Activation f) {
  for (T& x : v) x = f == Activation::relu ? relu(x) : sigmoid(x);
  return v;
}

template <class T>
bool all_finite(std::span<const T> values) {
  return std::all_of(values.begin(), values.end(), [](T x) { return std::isfinite(x); });
}

template <class T>
void require_finite(std::span<const T> values, const std::string& what) {
  if (!all_finite(values)) throw NumericalError("non-finite value in " + what);
}

template <class T>
T dot(std::span<const T> a, std::span<const T> b) {
  require(a.size() == b.size(), "dot: dimension mismatch");
  T acc = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <class T>
T dot(const Vector<T>& a, const Vector<T>& b) {
  return dot(a.span(), b.span());
}

template <class T>
T norm(const Vector<T>& v) {
  return std::sqrt(dot(v, v));
}

template <class T>
Vector<T> matvec(const Matrix<T>& m, const Vector<T>& v) {
  if (m.cols() != v.dim()) {
    throw InputError("matvec: matrix has " + std::to_string(m.cols()) +
                     " columns but vector has dimension " + std::to_string(v.dim()));
  }
  Vector<T> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), v.span());
  return out;
}

/// m * v + b
template <class T>
Vector<T> affine(const Matrix<T>& m, const Vector<T>& v, const Vector<T>& b) {
  require(b.dim() == m.rows(), "affine: bias dimension mismatch");
  Vector<T> out = matvec(m, v);
  out += b;
  return out;
}

/// m^T * v, used by the backward pass.
template <class T>
Vector<T> matvec_transposed(const Matrix<T>& m, const Vector<T>& v) {
  require(m.rows() == v.dim(), "matvec_transposed: dimension mismatch");
  Vector<T> out(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const T s = v[r];
    if (s == T(0)) continue;
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += s * row[c];
  }
  return out;
}

/// m += a * b^T
template <class T>
void add_outer(Matrix<T>& m, const Vector<T>& a, const Vector<T>& b) {
  require(m.rows() == a.dim() && m.cols() == b.dim(), "add_outer: dimension mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const T s = a[r];
    if (s == T(0)) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += s * b[c];
  }
}

/// Glorot/Xavier uniform: i.i.d. entries in [-a, a], a = sqrt(6 / (rows + cols)).
template <class T>
Matrix<T> glorot_uniform_init(std::size_t rows, std::size_t cols, Rng& rng) {
  require(rows >= 1 && cols >= 1, "glorot_uniform_init: dimensions must be positive");
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix<T> m(rows, cols);
  for (T& x : m.span()) x = static_cast<T>(rng.uniform(-a, a));
  return m;
}

template <class To, class From>
Vector<To> convert(const Vector<From>& v) {
  Vector<To> out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = static_cast<To>(v[i]);
  return out;
}

template <class To, class From>
Matrix<To> convert(const Matrix<From>& m) {
  Matrix<To> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = static_cast<To>(m.data()[i]);
  return out;
}

}  // namespace desireme
