#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qnmf/errors.hpp"

namespace qnmf {

using RealMatrix = Eigen::MatrixXd;

/// Hamilton quaternion re + i*im_i + j*im_j + k*im_k.
struct Quaternion {
  double re = 0.0;
  double im_i = 0.0;
  double im_j = 0.0;
  double im_k = 0.0;

  constexpr Quaternion() = default;
  constexpr Quaternion(double r) : re(r) {}  // NOLINT: real numbers embed implicitly
  constexpr Quaternion(double r, double i, double j, double k) : re(r), im_i(i), im_j(j), im_k(k) {}

  static constexpr Quaternion i() { return {0.0, 1.0, 0.0, 0.0}; }
  static constexpr Quaternion j() { return {0.0, 0.0, 1.0, 0.0}; }
  static constexpr Quaternion k() { return {0.0, 0.0, 0.0, 1.0}; }

  constexpr Quaternion& operator+=(const Quaternion& o) {
    re += o.re;
    im_i += o.im_i;
    im_j += o.im_j;
    im_k += o.im_k;
    return *this;
  }
  constexpr Quaternion& operator-=(const Quaternion& o) {
    re -= o.re;
    im_i -= o.im_i;
    im_j -= o.im_j;
    im_k -= o.im_k;
    return *this;
  }
  constexpr Quaternion& operator*=(double s) {
    re *= s;
    im_i *= s;
    im_j *= s;
    im_k *= s;
    return *this;
  }

  friend constexpr bool operator==(const Quaternion&, const Quaternion&) = default;
};

constexpr Quaternion operator+(Quaternion a, const Quaternion& b) { return a += b; }
constexpr Quaternion operator-(Quaternion a, const Quaternion& b) { return a -= b; }
constexpr Quaternion operator-(const Quaternion& a) { return {-a.re, -a.im_i, -a.im_j, -a.im_k}; }
constexpr Quaternion operator*(Quaternion a, double s) { return a *= s; }
constexpr Quaternion operator*(double s, Quaternion a) { return a *= s; }
constexpr Quaternion operator/(Quaternion a, double s) { return a *= (1.0 / s); }

/// Hamilton product: i^2 = j^2 = k^2 = ijk = -1.
constexpr Quaternion operator*(const Quaternion& p, const Quaternion& q) {
  return {p.re * q.re - p.im_i * q.im_i - p.im_j * q.im_j - p.im_k * q.im_k,
          p.re * q.im_i + p.im_i * q.re + p.im_j * q.im_k - p.im_k * q.im_j,
          p.re * q.im_j - p.im_i * q.im_k + p.im_j * q.re + p.im_k * q.im_i,
          p.re * q.im_k + p.im_i * q.im_j - p.im_j * q.im_i + p.im_k * q.re};
}

constexpr Quaternion qmul(const Quaternion& p, const Quaternion& q) { return p * q; }

constexpr Quaternion conj(const Quaternion& q) { return {q.re, -q.im_i, -q.im_j, -q.im_k}; }

/// Four-dimensional Euclidean inner product, equal to Re(p * conj(q)).
constexpr double dot4(const Quaternion& p, const Quaternion& q) {
  return p.re * q.re + p.im_i * q.im_i + p.im_j * q.im_j + p.im_k * q.im_k;
}

constexpr double norm_sq(const Quaternion& q) { return dot4(q, q); }
inline double abs(const Quaternion& q) { return std::sqrt(norm_sq(q)); }

constexpr Quaternion imag(const Quaternion& q) { return {0.0, q.im_i, q.im_j, q.im_k}; }
constexpr double imag_norm_sq(const Quaternion& q) {
  return q.im_i * q.im_i + q.im_j * q.im_j + q.im_k * q.im_k;
}
inline double imag_abs(const Quaternion& q) { return std::sqrt(imag_norm_sq(q)); }

/// Relative comparison: |p - q| <= tol * max(1, |p|, |q|).
inline bool approx_equal(const Quaternion& p, const Quaternion& q, double tol = 1e-9) {
  const double scale = std::max({1.0, abs(p), abs(q)});
  return abs(p - q) <= tol * scale;
}

/// Selects one of the four real component planes of a quaternion.
enum class Component { re = 0, i = 1, j = 2, k = 3 };

constexpr double component(const Quaternion& q, Component c) {
  switch (c) {
    case Component::re: return q.re;
    case Component::i: return q.im_i;
    case Component::j: return q.im_j;
    case Component::k: return q.im_k;
  }
  return 0.0;
}

constexpr double& component(Quaternion& q, Component c) {
  switch (c) {
    case Component::i: return q.im_i;
    case Component::j: return q.im_j;
    case Component::k: return q.im_k;
    default: return q.re;
  }
}

inline constexpr std::array<Component, 4> kComponents = {Component::re, Component::i, Component::j,
                                                         Component::k};

/// Dense row-major quaternion matrix.
class QuaternionMatrix {
 public:
  QuaternionMatrix() = default;
  QuaternionMatrix(std::size_t rows, std::size_t cols, Quaternion fill = {})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  QuaternionMatrix(std::size_t rows, std::size_t cols, std::vector<Quaternion> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("QuaternionMatrix: entry count does not match rows*cols");
    }
  }

  static QuaternionMatrix identity(std::size_t n) {
    QuaternionMatrix out(n, n);
    for (std::size_t d = 0; d < n; ++d) out(d, d) = 1.0;
    return out;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  Quaternion& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Quaternion& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<Quaternion> entries() noexcept { return data_; }
  std::span<const Quaternion> entries() const noexcept { return data_; }

  friend bool operator==(const QuaternionMatrix&, const QuaternionMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Quaternion> data_;
};

namespace detail {
inline void require_same_shape(const QuaternionMatrix& a, const QuaternionMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
  }
}
inline void require_inner(std::size_t lhs_cols, std::size_t rhs_rows, const char* op) {
  if (lhs_cols != rhs_rows) {
    throw DimensionError(std::string(op) + ": inner dimensions differ (" + std::to_string(lhs_cols) +
                         " vs " + std::to_string(rhs_rows) + ")");
  }
}
}  // namespace detail

inline QuaternionMatrix operator+(const QuaternionMatrix& a, const QuaternionMatrix& b) {
  detail::require_same_shape(a, b, "add");
  QuaternionMatrix out = a;
  auto dst = out.entries();
  auto src = b.entries();
  for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += src[e];
  return out;
}

inline QuaternionMatrix operator-(const QuaternionMatrix& a, const QuaternionMatrix& b) {
  detail::require_same_shape(a, b, "subtract");
  QuaternionMatrix out = a;
  auto dst = out.entries();
  auto src = b.entries();
  for (std::size_t e = 0; e < dst.size(); ++e) dst[e] -= src[e];
  return out;
}

/// C = A * B with factor order preserved in every Hamilton product.
inline QuaternionMatrix matmul(const QuaternionMatrix& a, const QuaternionMatrix& b) {
  detail::require_inner(a.cols(), b.rows(), "matmul");
  QuaternionMatrix out(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t s = 0; s < a.cols(); ++s) {
      const Quaternion lhs = a(r, s);
      for (std::size_t c = 0; c < b.cols(); ++c) out(r, c) += lhs * b(s, c);
    }
  }
  return out;
}

/// Quaternion matrix times real matrix.
inline QuaternionMatrix matmul(const QuaternionMatrix& a, const RealMatrix& b) {
  detail::require_inner(a.cols(), static_cast<std::size_t>(b.rows()), "matmul");
  QuaternionMatrix out(a.rows(), static_cast<std::size_t>(b.cols()));
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      Quaternion acc;
      for (std::size_t s = 0; s < a.cols(); ++s) acc += a(r, s) * b(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c));
      out(r, c) = acc;
    }
  }
  return out;
}

inline QuaternionMatrix from_real(const RealMatrix& m) {
  QuaternionMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m(r, c);
  return out;
}

inline QuaternionMatrix transpose(const QuaternionMatrix& q) {
  QuaternionMatrix out(q.cols(), q.rows());
  for (std::size_t r = 0; r < q.rows(); ++r)
    for (std::size_t c = 0; c < q.cols(); ++c) out(c, r) = q(r, c);
  return out;
}

/// Entry-wise conjugate.
inline QuaternionMatrix conj(const QuaternionMatrix& q) {
  QuaternionMatrix out = q;
  for (auto& e : out.entries()) e = conj(e);
  return out;
}

/// Conjugate transpose.
inline QuaternionMatrix dagger(const QuaternionMatrix& q) {
  QuaternionMatrix out(q.cols(), q.rows());
  for (std::size_t r = 0; r < q.rows(); ++r)
    for (std::size_t c = 0; c < q.cols(); ++c) out(c, r) = conj(q(r, c));
  return out;
}

inline RealMatrix plane(const QuaternionMatrix& q, Component which) {
  RealMatrix out(static_cast<Eigen::Index>(q.rows()), static_cast<Eigen::Index>(q.cols()));
  for (std::size_t r = 0; r < q.rows(); ++r)
    for (std::size_t c = 0; c < q.cols(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = component(q(r, c), which);
  return out;
}

/// The four real component planes (re, i, j, k).
using Planes = std::array<RealMatrix, 4>;

inline Planes to_planes(const QuaternionMatrix& q) {
  return {plane(q, Component::re), plane(q, Component::i), plane(q, Component::j),
          plane(q, Component::k)};
}

inline QuaternionMatrix from_planes(const Planes& p) {
  const auto rows = static_cast<std::size_t>(p[0].rows());
  const auto cols = static_cast<std::size_t>(p[0].cols());
  for (const auto& m : p) {
    if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols) {
      throw DimensionError("from_planes: component planes differ in shape");
    }
  }
  QuaternionMatrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto rr = static_cast<Eigen::Index>(r);
      const auto cc = static_cast<Eigen::Index>(c);
      out(r, c) = {p[0](rr, cc), p[1](rr, cc), p[2](rr, cc), p[3](rr, cc)};
    }
  }
  return out;
}

inline RealMatrix real_part(const QuaternionMatrix& q) { return plane(q, Component::re); }

/// Pure-imaginary part; every entry has re == 0.
inline QuaternionMatrix imag_part(const QuaternionMatrix& q) {
  QuaternionMatrix out = q;
  for (auto& e : out.entries()) e.re = 0.0;
  return out;
}

inline double frobenius_sq(const QuaternionMatrix& q) {
  double acc = 0.0;
  for (const auto& e : q.entries()) acc += norm_sq(e);
  return acc;
}

inline bool approx_equal(const QuaternionMatrix& a, const QuaternionMatrix& b, double tol = 1e-9) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  auto ea = a.entries();
  auto eb = b.entries();
  for (std::size_t e = 0; e < ea.size(); ++e)
    if (!approx_equal(ea[e], eb[e], tol)) return false;
  return true;
}

}  // namespace qnmf
