#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include "qnmf/errors.hpp"
#include "qnmf/quaternion.hpp"

namespace qnmf {

/// Stokes vector (S0, S1, S2, S3). S0 is total intensity.
struct StokesSample {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;

  friend constexpr bool operator==(const StokesSample&, const StokesSample&) = default;
};

/// Default relative tolerance for cone membership.
inline constexpr double kConeTol = 1e-9;

/// Quaternion embedding w = S0 + i S3 + j S1 + k S2.
constexpr Quaternion stokes_to_quaternion(const StokesSample& s) { return {s.s0, s.s3, s.s1, s.s2}; }

constexpr StokesSample quaternion_to_stokes(const Quaternion& q) {
  return {q.re, q.im_j, q.im_k, q.im_i};
}

/// Admissibility of a Stokes vector: S0 >= 0 and S1^2 + S2^2 + S3^2 <= S0^2.
inline bool is_admissible(const StokesSample& s, double tol = kConeTol) {
  return s.s0 >= 0.0 && s.s1 * s.s1 + s.s2 * s.s2 + s.s3 * s.s3 <= s.s0 * s.s0 * (1.0 + tol);
}

inline double degree_of_polarization(const StokesSample& s) {
  if (!(s.s0 > 0.0)) throw InvalidArgument("degree_of_polarization: zero or negative intensity");
  return std::sqrt(s.s1 * s.s1 + s.s2 * s.s2 + s.s3 * s.s3) / s.s0;
}

/// Membership in the cone of non-negative quaternions, with tolerance scaled by
/// max(1, |q|).
inline bool in_cone(const Quaternion& q, double tol = kConeTol) {
  const double scale = std::max(1.0, abs(q));
  if (q.re < -tol * scale) return false;
  const double slack = tol * scale;
  return imag_norm_sq(q) <= q.re * q.re * (1.0 + tol) + slack * slack;
}

inline bool in_cone(const QuaternionMatrix& m, double tol = kConeTol) {
  return std::all_of(m.entries().begin(), m.entries().end(),
                     [tol](const Quaternion& q) { return in_cone(q, tol); });
}

/// Intensity / degree of polarization / axis description, w = I + I*dop*axis.
struct PolarizationDescriptor {
  double intensity = 0.0;
  double dop = 0.0;
  Quaternion axis = Quaternion::i();

  Quaternion to_quaternion() const { return intensity + intensity * dop * axis; }

  /// Splits a cone member into its descriptor. The axis of an unpolarized or
  /// zero-intensity quaternion is undefined; `i` is returned in that case.
  static PolarizationDescriptor from_quaternion(const Quaternion& w) {
    PolarizationDescriptor d;
    d.intensity = w.re;
    const double im = imag_abs(w);
    if (w.re > 0.0) d.dop = im / w.re;
    if (im > 0.0) d.axis = imag(w) / im;
    return d;
  }
};

/// 2x2 complex Hermitian matrix [[a, c], [conj(c), b]].
struct HermitianTwo {
  double a = 0.0;
  double b = 0.0;
  std::complex<double> c{0.0, 0.0};

  double trace() const { return a + b; }
  double det() const { return a * b - std::norm(c); }
  bool is_psd(double tol = 0.0) const {
    const double scale = std::max({1.0, std::abs(a), std::abs(b), std::abs(c)});
    return trace() >= -tol * scale && det() >= -tol * scale * scale;
  }
};

inline HermitianTwo quat_to_hermitian(const Quaternion& q) {
  return {0.5 * (q.re + q.im_j), 0.5 * (q.re - q.im_j), {0.5 * q.im_k, 0.5 * q.im_i}};
}

inline Quaternion hermitian_to_quat(const HermitianTwo& h) {
  return {h.a + h.b, 2.0 * h.c.imag(), h.a - h.b, 2.0 * h.c.real()};
}

using Complex2 = std::array<std::complex<double>, 2>;

/// Eigen-decomposition of a 2x2 Hermitian matrix; eta1 >= eta2.
struct HermitianEigen {
  double eta1 = 0.0;
  double eta2 = 0.0;
  Complex2 v1{};
  Complex2 v2{};
};

inline HermitianEigen eig2_hermitian(const HermitianTwo& h) {
  const double mean = 0.5 * (h.a + h.b);
  const double half_gap = 0.5 * (h.a - h.b);
  const double radius = std::hypot(half_gap, std::abs(h.c));
  HermitianEigen out;
  out.eta1 = mean + radius;
  out.eta2 = mean - radius;

  // Two candidate eigenvectors for eta1: (c, eta1 - a) and (eta1 - b, conj(c)).
  // Take the better conditioned one.
  const Complex2 first{h.c, out.eta1 - h.a};
  const Complex2 second{out.eta1 - h.b, std::conj(h.c)};
  const double n_first = std::norm(first[0]) + std::norm(first[1]);
  const double n_second = std::norm(second[0]) + std::norm(second[1]);
  const Complex2& pick = n_first >= n_second ? first : second;
  const double n_pick = std::sqrt(std::max(n_first, n_second));
  const double scale = std::max({1.0, std::abs(h.a), std::abs(h.b), std::abs(h.c)});

  if (n_pick <= 1e-300 * scale || radius == 0.0) {
    // Degenerate (a == b, c == 0): any orthonormal basis diagonalizes h.
    out.v1 = {1.0, 0.0};
    out.v2 = {0.0, 1.0};
    return out;
  }
  out.v1 = {pick[0] / n_pick, pick[1] / n_pick};
  out.v2 = {-std::conj(out.v1[1]), std::conj(out.v1[0])};
  return out;
}

/// Euclidean projection of a single quaternion onto the cone, computed by
/// clipping the eigenvalues of its Hermitian image.
inline Quaternion project_cone(const Quaternion& q) {
  // Exact members are fixed points.
  if (q.re >= 0.0 && imag_norm_sq(q) <= q.re * q.re) return q;
  const HermitianEigen e = eig2_hermitian(quat_to_hermitian(q));
  HermitianTwo p;
  const auto accumulate = [&p](double eta, const Complex2& v) {
    if (eta <= 0.0) return;
    p.a += eta * std::norm(v[0]);
    p.b += eta * std::norm(v[1]);
    p.c += eta * v[0] * std::conj(v[1]);
  };
  accumulate(e.eta1, e.v1);
  accumulate(e.eta2, e.v2);
  return hermitian_to_quat(p);
}

inline QuaternionMatrix project_cone(const QuaternionMatrix& m) {
  QuaternionMatrix out = m;
  for (auto& e : out.entries()) e = project_cone(e);
  return out;
}

inline RealMatrix project_nonneg(const RealMatrix& m) { return m.cwiseMax(0.0); }

}  // namespace qnmf
