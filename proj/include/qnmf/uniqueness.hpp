#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qnmf/errors.hpp"
#include "qnmf/qals.hpp"
#include "qnmf/quaternion.hpp"
#include "qnmf/stokes.hpp"

// Two-source (P = 2) identifiability analysis. The non-trivial ambiguities are
// parameterized by T(alpha, beta) = [[1 - alpha, beta], [alpha, 1 - beta]],
// giving W~ = W T and H~ = T^{-1} H. Alpha is analyzed with beta = 0 and vice
// versa.

namespace qnmf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval over the extended reals. Endpoint flags record whether the
/// endpoint itself is admissible.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = true;
  bool hi_closed = true;

  static Interval all() { return {-kInf, kInf, false, false}; }
  static Interval point(double t) { return {t, t, true, true}; }

  bool contains(double t, double tol = 0.0) const { return t >= lo - tol && t <= hi + tol; }
  double width() const { return hi - lo; }
  bool empty() const { return lo > hi; }
  bool is_zero(double tol = 1e-9) const { return std::abs(lo) <= tol && std::abs(hi) <= tol; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline Interval intersect(const Interval& a, const Interval& b) {
  Interval out;
  if (a.lo > b.lo) {
    out.lo = a.lo;
    out.lo_closed = a.lo_closed;
  } else if (b.lo > a.lo) {
    out.lo = b.lo;
    out.lo_closed = b.lo_closed;
  } else {
    out.lo = a.lo;
    out.lo_closed = a.lo_closed && b.lo_closed;
  }
  if (a.hi < b.hi) {
    out.hi = a.hi;
    out.hi_closed = a.hi_closed;
  } else if (b.hi < a.hi) {
    out.hi = b.hi;
    out.hi_closed = b.hi_closed;
  } else {
    out.hi = a.hi;
    out.hi_closed = a.hi_closed && b.hi_closed;
  }
  return out;
}

/// T(alpha, beta).
inline RealMatrix transform_matrix(double alpha, double beta) {
  RealMatrix t(2, 2);
  t << 1.0 - alpha, beta, alpha, 1.0 - beta;
  return t;
}

/// T(alpha, beta)^{-1}; requires alpha + beta != 1.
inline RealMatrix transform_inverse(double alpha, double beta) {
  const double det = 1.0 - alpha - beta;
  if (det == 0.0) throw InvalidArgument("transform_inverse: alpha + beta = 1 is singular");
  RealMatrix t(2, 2);
  t << 1.0 - beta, -beta, -alpha, 1.0 - alpha;
  return t / det;
}

/// (W T, T^{-1} H): an alternative factorization of the same data.
inline QnmfFactors apply_transform(const QnmfFactors& f, double alpha, double beta) {
  if (f.rank() != 2) throw DimensionError("apply_transform: rank must be 2");
  return {matmul(f.W, transform_matrix(alpha, beta)), transform_inverse(alpha, beta) * f.H};
}

/// <mu1, mu2> = -Re(mu1 mu2) for pure unit quaternions.
inline double inner_axis(const Quaternion& mu1, const Quaternion& mu2, double tol = 1e-9) {
  for (const auto* mu : {&mu1, &mu2}) {
    if (std::abs(mu->re) > tol || std::abs(abs(*mu) - 1.0) > tol) {
      throw InvalidArgument("inner_axis: axes must be pure unit quaternions");
    }
  }
  return -(mu1 * mu2).re;
}

/// Source descriptors of one spectral row, w_mp = I_mp (1 + dop_mp axis_mp).
struct RowPolarization {
  double i1 = 0.0;
  double dop1 = 0.0;
  Quaternion axis1 = Quaternion::i();
  double i2 = 0.0;
  double dop2 = 0.0;
  Quaternion axis2 = Quaternion::i();

  static RowPolarization from_sources(const Quaternion& w1, const Quaternion& w2) {
    const auto d1 = PolarizationDescriptor::from_quaternion(w1);
    const auto d2 = PolarizationDescriptor::from_quaternion(w2);
    return {d1.intensity, d1.dop, d1.axis, d2.intensity, d2.dop, d2.axis};
  }

  /// 1 - dop1 dop2 <axis1, axis2>.
  double coupling() const { return 1.0 - dop1 * dop2 * inner_axis(axis1, axis2); }
};

/// a2 t^2 + a1 t + a0 >= 0.
struct QuadraticInequality {
  double a2 = 0.0;
  double a1 = 0.0;
  double a0 = 0.0;

  double operator()(double t) const { return (a2 * t + a1) * t + a0; }
};

/// Polarization constraint on w~_m1 = (1 - alpha) w_m1 + alpha w_m2 as a
/// quadratic in alpha.
inline QuadraticInequality polarization_inequality_alpha(const RowPolarization& r) {
  const double self1 = r.i1 * r.i1 * (1.0 - r.dop1 * r.dop1);
  const double self2 = r.i2 * r.i2 * (1.0 - r.dop2 * r.dop2);
  const double cross = r.i1 * r.i2 * r.coupling();
  return {self1 + self2 - 2.0 * cross, 2.0 * (cross - self1), self1};
}

/// Polarization constraint on w~_m2 = beta w_m1 + (1 - beta) w_m2.
inline QuadraticInequality polarization_inequality_beta(const RowPolarization& r) {
  const double self1 = r.i1 * r.i1 * (1.0 - r.dop1 * r.dop1);
  const double self2 = r.i2 * r.i2 * (1.0 - r.dop2 * r.dop2);
  const double cross = r.i1 * r.i2 * r.coupling();
  return {self2 + self1 - 2.0 * cross, 2.0 * (cross - self2), self2};
}

/// Solution set of a quadratic inequality: at most two disjoint closed
/// intervals in increasing order. Coefficients below 1e-12 of the largest one
/// are treated as zero, so near-degenerate quadratics fall back to the linear
/// or constant case.
inline std::vector<Interval> solve_quadratic_ineq(QuadraticInequality q) {
  const double scale = std::max({std::abs(q.a2), std::abs(q.a1), std::abs(q.a0)});
  const double eps = 1e-12 * scale;
  for (double* c : {&q.a2, &q.a1, &q.a0})
    if (std::abs(*c) <= eps) *c = 0.0;

  if (q.a2 == 0.0) {
    if (q.a1 == 0.0) {
      if (q.a0 >= 0.0) return {Interval::all()};
      return {};
    }
    const double root = -q.a0 / q.a1;
    if (q.a1 > 0.0) return {{root, kInf, true, false}};
    return {{-kInf, root, false, true}};
  }

  const double disc = q.a1 * q.a1 - 4.0 * q.a2 * q.a0;
  if (disc < 0.0) {
    if (q.a2 > 0.0) return {Interval::all()};
    return {};
  }
  // Numerically stable roots.
  const double sq = std::sqrt(disc);
  const double t = -0.5 * (q.a1 + (q.a1 >= 0.0 ? sq : -sq));
  double r1 = t / q.a2;
  double r2 = t != 0.0 ? q.a0 / t : r1;
  if (r1 > r2) std::swap(r1, r2);
  if (q.a2 > 0.0) {
    if (r1 == r2) return {Interval::all()};
    return {{-kInf, r1, false, true}, {r2, kInf, true, false}};
  }
  return {{r1, r2, true, true}};
}

/// Connected component of a solution set containing 0. Endpoints within `tol`
/// of 0 are snapped so that the result always contains 0.
inline std::optional<Interval> component_containing_zero(const std::vector<Interval>& set, double tol = 1e-12) {
  for (Interval iv : set) {
    if (iv.contains(0.0, tol)) {
      if (std::abs(iv.lo) <= tol) iv.lo = 0.0;
      if (std::abs(iv.hi) <= tol) iv.hi = 0.0;
      iv.lo = std::min(iv.lo, 0.0);
      iv.hi = std::max(iv.hi, 0.0);
      return iv;
    }
  }
  return std::nullopt;
}

/// NMF-only admissible intervals for alpha and beta.
struct NmfIntervals {
  Interval alpha;
  Interval beta;
};

/// Intervals from non-negativity of Re W~ and H~. `intensity` holds Re W
/// (M x 2). Alpha and beta are restricted to (-inf, 1) so T stays invertible.
inline NmfIntervals nmf_intervals(const RealMatrix& intensity, const RealMatrix& H) {
  if (intensity.cols() != 2 || H.rows() != 2) throw DimensionError("nmf_intervals: rank must be 2");
  NmfIntervals out{{-kInf, 1.0, false, false}, {-kInf, 1.0, false, false}};

  for (Eigen::Index m = 0; m < intensity.rows(); ++m) {
    const double i1 = intensity(m, 0);
    const double i2 = intensity(m, 1);
    if (i2 > i1) {
      // Re w~_m1 = i1 + alpha (i2 - i1) >= 0 bounds alpha below.
      out.alpha = intersect(out.alpha, {-i1 / (i2 - i1), kInf, true, false});
      out.beta = intersect(out.beta, {-kInf, i2 / (i2 - i1), false, true});
    } else if (i1 > i2) {
      out.beta = intersect(out.beta, {-i2 / (i1 - i2), kInf, true, false});
      out.alpha = intersect(out.alpha, {-kInf, i1 / (i1 - i2), false, true});
    }
  }
  for (Eigen::Index n = 0; n < H.cols(); ++n) {
    const double h1 = H(0, n);
    const double h2 = H(1, n);
    const double sum = h1 + h2;
    // An all-zero column stays zero under any T^{-1}.
    if (!(sum > 0.0)) continue;
    out.alpha = intersect(out.alpha, {-kInf, h2 / sum, false, true});
    out.beta = intersect(out.beta, {-kInf, h1 / sum, false, true});
  }
  return out;
}

struct AdmissibilityReport {
  Interval nmf_alpha;
  Interval nmf_beta;
  /// Per-row component (containing 0) of the polarization constraint sets.
  std::vector<Interval> pol_alpha_rows;
  std::vector<Interval> pol_beta_rows;
  Interval qnmf_alpha;
  Interval qnmf_beta;
  bool unique = false;
  /// Rows whose polarization interval sets the qnmf endpoints (if any).
  std::optional<std::size_t> binding_alpha_lo, binding_alpha_hi, binding_beta_lo, binding_beta_hi;
};

namespace detail {
inline void require_rank_two(const QuaternionMatrix& W, const RealMatrix& H, const char* op) {
  if (W.cols() != 2 || H.rows() != 2) throw DimensionError(std::string(op) + ": requires P = 2 factors");
  if (static_cast<std::size_t>(H.rows()) != W.cols()) throw DimensionError(std::string(op) + ": rank mismatch");
}

inline void require_feasible(const QuaternionMatrix& W, const RealMatrix& H, const char* op) {
  if (!in_cone(W)) throw InfeasibleInput(std::string(op) + ": W has entries outside the cone");
  if (H.size() > 0 && H.minCoeff() < 0.0) throw InfeasibleInput(std::string(op) + ": H has negative entries");
}
}  // namespace detail

/// Admissible (alpha, beta) ranges for P = 2 factors, separating the
/// non-negativity and polarization contributions.
inline AdmissibilityReport admissibility_report(const QuaternionMatrix& W, const RealMatrix& H,
                                                double zero_tol = 1e-9) {
  detail::require_rank_two(W, H, "admissibility_report");
  detail::require_feasible(W, H, "admissibility_report");

  AdmissibilityReport rep;
  const NmfIntervals nmf = nmf_intervals(real_part(W), H);
  rep.nmf_alpha = nmf.alpha;
  rep.nmf_beta = nmf.beta;
  rep.qnmf_alpha = nmf.alpha;
  rep.qnmf_beta = nmf.beta;

  for (std::size_t m = 0; m < W.rows(); ++m) {
    const RowPolarization row = RowPolarization::from_sources(W(m, 0), W(m, 1));
    const auto a = component_containing_zero(solve_quadratic_ineq(polarization_inequality_alpha(row)));
    const auto b = component_containing_zero(solve_quadratic_ineq(polarization_inequality_beta(row)));
    if (!a || !b) {
      throw InfeasibleInput("admissibility_report: identity transform infeasible at row " + std::to_string(m));
    }
    rep.pol_alpha_rows.push_back(*a);
    rep.pol_beta_rows.push_back(*b);

    const Interval prev_a = rep.qnmf_alpha;
    const Interval prev_b = rep.qnmf_beta;
    rep.qnmf_alpha = intersect(rep.qnmf_alpha, *a);
    rep.qnmf_beta = intersect(rep.qnmf_beta, *b);
    if (rep.qnmf_alpha.lo > prev_a.lo) rep.binding_alpha_lo = m;
    if (rep.qnmf_alpha.hi < prev_a.hi) rep.binding_alpha_hi = m;
    if (rep.qnmf_beta.lo > prev_b.lo) rep.binding_beta_lo = m;
    if (rep.qnmf_beta.hi < prev_b.hi) rep.binding_beta_hi = m;
  }
  rep.unique = rep.qnmf_alpha.is_zero(zero_tol) && rep.qnmf_beta.is_zero(zero_tol);
  return rep;
}

/// Tolerances for the polarization-state predicates of the condition checkers.
struct ConditionTolerance {
  /// |dop - 1| below this counts as fully polarized; also the threshold for
  /// distinguishing polarization states.
  double state = 1e-9;
  /// Activations at or below this count as zero.
  double zero = 0.0;
};

namespace detail {

/// dop * axis of a cone member, i.e. Im w / Re w (0 for a zero entry).
inline Quaternion polarization_vector(const Quaternion& w) {
  if (!(w.re > 0.0)) return {};
  return imag(w) / w.re;
}

inline bool fully_polarized(const Quaternion& w, double tol) {
  return w.re > 0.0 && std::abs(imag_abs(w) / w.re - 1.0) <= tol;
}

/// dop_q axis_q != axis_p, with axis_p taken from a fully polarized w_p.
inline bool distinct_state(const Quaternion& wp, const Quaternion& wq, double tol) {
  return abs(polarization_vector(wq) - polarization_vector(wp)) > tol;
}

inline double axis_dot(const Quaternion& a, const Quaternion& b) {
  return a.im_i * b.im_i + a.im_j * b.im_j + a.im_k * b.im_k;
}

/// 1/2 (1 - dop_o^2) / (1 - dop_o <axis_f, axis_o>) * I_o, the intensity the
/// fully polarized source must reach. `full_axis` is a unit pure quaternion.
inline double intensity_threshold(const Quaternion& full_axis, const Quaternion& other) {
  const Quaternion pv = polarization_vector(other);
  const double dop_sq = imag_norm_sq(pv);
  const double denom = 1.0 - axis_dot(full_axis, pv);
  if (!(denom > 0.0)) return kInf;
  return 0.5 * (1.0 - dop_sq) / denom * other.re;
}

inline Quaternion unit_axis(const Quaternion& w) { return imag(w) / imag_abs(w); }

}  // namespace detail

struct SufficientCheck {
  bool holds = false;
  bool c1 = false;
  bool c2 = false;
  std::optional<std::size_t> m1, m2, n1, n2;
  /// m1 == m2: both sources fully polarized with different axes at one row.
  bool collapsed = false;
  /// C1 outcome when its first intensity inequality pairs the axis of row m1
  /// with the axis of row m2 instead of row m1.
  bool c1_mixed_reading = false;
  bool readings_disagree = false;
};

/// Sufficient uniqueness conditions C1 (polarization) and C2 (pure activation
/// columns) for P = 2.
inline SufficientCheck check_sufficient_c1_c2(const QuaternionMatrix& W, const RealMatrix& H,
                                              ConditionTolerance tol = {}) {
  detail::require_rank_two(W, H, "check_sufficient_c1_c2");
  SufficientCheck out;

  // Row m satisfies the first block: source 1 fully polarized, source 2 in a
  // different state and not too intense.
  const auto block = [&](std::size_t m, std::size_t full, std::size_t other, const Quaternion& axis_for_bound) {
    const Quaternion& wf = W(m, full);
    const Quaternion& wo = W(m, other);
    if (!detail::fully_polarized(wf, tol.state)) return false;
    if (!detail::distinct_state(wf, wo, tol.state)) return false;
    return wf.re >= detail::intensity_threshold(axis_for_bound, wo) * (1.0 - tol.state);
  };

  std::vector<std::size_t> rows1, rows2;
  for (std::size_t m = 0; m < W.rows(); ++m) {
    if (detail::fully_polarized(W(m, 0), tol.state) && block(m, 0, 1, detail::unit_axis(W(m, 0)))) rows1.push_back(m);
    if (detail::fully_polarized(W(m, 1), tol.state) && block(m, 1, 0, detail::unit_axis(W(m, 1)))) rows2.push_back(m);
  }
  out.c1 = !rows1.empty() && !rows2.empty();
  if (out.c1) {
    out.m1 = rows1.front();
    out.m2 = rows2.front();
    for (std::size_t m : rows1) {
      if (std::find(rows2.begin(), rows2.end(), m) != rows2.end()) {
        out.m1 = out.m2 = m;
        out.collapsed = true;
        break;
      }
    }
  }

  // Mixed reading: <axis_{m1,1}, axis_{m2,2}> in the first intensity inequality.
  for (std::size_t m2 : rows2) {
    const Quaternion axis2 = detail::unit_axis(W(m2, 1));
    for (std::size_t m1 = 0; m1 < W.rows() && !out.c1_mixed_reading; ++m1) {
      const Quaternion& wf = W(m1, 0);
      const Quaternion& wo = W(m1, 1);
      if (!detail::fully_polarized(wf, tol.state) || !detail::distinct_state(wf, wo, tol.state)) continue;
      const Quaternion pv = detail::polarization_vector(wo);
      const double dop = imag_abs(pv);
      const double denom = 1.0 - dop * detail::axis_dot(detail::unit_axis(wf), axis2);
      const double bound = denom > 0.0 ? 0.5 * (1.0 - dop * dop) / denom * wo.re : kInf;
      if (wf.re >= bound * (1.0 - tol.state)) out.c1_mixed_reading = true;
    }
    if (out.c1_mixed_reading) break;
  }
  out.readings_disagree = out.c1 != out.c1_mixed_reading;

  for (Eigen::Index n = 0; n < H.cols(); ++n) {
    const bool zero1 = H(0, n) <= tol.zero;
    const bool zero2 = H(1, n) <= tol.zero;
    if (!out.n1 && !zero1 && zero2) out.n1 = static_cast<std::size_t>(n);
    if (!out.n2 && !zero2 && zero1) out.n2 = static_cast<std::size_t>(n);
  }
  out.c2 = out.n1.has_value() && out.n2.has_value();
  out.holds = out.c1 && out.c2;
  return out;
}

struct NecessaryCheck {
  bool holds = true;
  /// First ordered pair (p, q) for which A1 or A2 fails.
  std::optional<std::pair<std::size_t, std::size_t>> violating_pair;
  /// "A1" or "A2" for the violating pair.
  std::string violated;
};

/// Necessary conditions A1/A2 for uniqueness with non-vanishing sources, any P.
inline NecessaryCheck check_necessary_a1_a2(const QuaternionMatrix& W, const RealMatrix& H,
                                            ConditionTolerance tol = {}) {
  const std::size_t rank = W.cols();
  if (static_cast<std::size_t>(H.rows()) != rank) throw DimensionError("check_necessary_a1_a2: rank mismatch");
  for (const auto& w : W.entries()) {
    if (!(w.re > 0.0)) {
      throw InvalidArgument("check_necessary_a1_a2: requires non-vanishing sources (Re w_mp > 0 for all m, p)");
    }
  }
  NecessaryCheck out;
  for (std::size_t p = 0; p < rank; ++p) {
    for (std::size_t q = 0; q < rank; ++q) {
      if (p == q) continue;
      bool a1 = false;
      for (std::size_t m = 0; m < W.rows() && !a1; ++m) {
        a1 = detail::fully_polarized(W(m, p), tol.state) && detail::distinct_state(W(m, p), W(m, q), tol.state);
      }
      bool a2 = false;
      for (Eigen::Index n = 0; n < H.cols() && !a2; ++n) {
        a2 = H(static_cast<Eigen::Index>(p), n) <= tol.zero && H(static_cast<Eigen::Index>(q), n) > tol.zero;
      }
      if (!a1 || !a2) {
        out.holds = false;
        out.violating_pair = {p, q};
        out.violated = !a1 ? "A1" : "A2";
        return out;
      }
    }
  }
  return out;
}

struct SeparabilityCheck {
  bool w_separable = false;
  bool h_separable = false;
  /// Witness row of Re W (resp. column of H) for each source, when found.
  std::vector<std::optional<std::size_t>> w_rows;
  std::vector<std::optional<std::size_t>> h_cols;

  bool holds() const { return w_separable && h_separable; }
};

/// Separability of Re W (pure rows) and H (pure columns). When both hold the
/// intensity NMF is essentially unique, hence so is the QNMF.
inline SeparabilityCheck check_prop2_delegate(const QuaternionMatrix& W, const RealMatrix& H, double zero_tol = 0.0) {
  const std::size_t rank = W.cols();
  if (static_cast<std::size_t>(H.rows()) != rank) throw DimensionError("check_prop2_delegate: rank mismatch");
  SeparabilityCheck out;
  out.w_rows.assign(rank, std::nullopt);
  out.h_cols.assign(rank, std::nullopt);

  for (std::size_t m = 0; m < W.rows(); ++m) {
    std::size_t active = 0, which = 0;
    for (std::size_t p = 0; p < rank; ++p) {
      if (W(m, p).re > zero_tol) {
        ++active;
        which = p;
      }
    }
    if (active == 1 && !out.w_rows[which]) out.w_rows[which] = m;
  }
  for (Eigen::Index n = 0; n < H.cols(); ++n) {
    std::size_t active = 0, which = 0;
    for (std::size_t p = 0; p < rank; ++p) {
      if (H(static_cast<Eigen::Index>(p), n) > zero_tol) {
        ++active;
        which = p;
      }
    }
    if (active == 1 && !out.h_cols[which]) out.h_cols[which] = static_cast<std::size_t>(n);
  }
  const auto all_found = [](const auto& v) { return std::all_of(v.begin(), v.end(), [](const auto& o) { return o.has_value(); }); };
  out.w_separable = all_found(out.w_rows);
  out.h_separable = all_found(out.h_cols);
  return out;
}

}  // namespace qnmf
