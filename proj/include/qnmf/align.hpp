#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "qnmf/errors.hpp"
#include "qnmf/qals.hpp"

namespace qnmf {

/// Estimated factors brought into correspondence with a reference.
struct Alignment {
  QnmfFactors aligned;
  /// aligned column p of W is estimated column permutation[p].
  std::vector<std::size_t> permutation;
  /// Positive scale applied to each aligned W column (H rows get 1/scale).
  std::vector<double> scales;
  /// ||W_aligned - W_ref||^2 / ||W_ref||^2.
  double error_w = 0.0;
  /// ||H_aligned - H_ref||^2 / ||H_ref||^2.
  double error_h = 0.0;
};

inline constexpr std::size_t kMaxAlignRank = 10;

/// Resolves the permutation and positive scaling ambiguities of `est` against
/// `truth`: every permutation is scored with the optimal positive per-column
/// scale of W, and the best one is applied to both factors.
inline Alignment align_factors(const QnmfFactors& est, const QnmfFactors& truth) {
  const std::size_t rank = truth.rank();
  if (est.rank() != rank || static_cast<std::size_t>(est.H.rows()) != rank ||
      static_cast<std::size_t>(truth.H.rows()) != rank) {
    throw DimensionError("align_factors: rank mismatch (" + std::to_string(est.rank()) + " vs " +
                         std::to_string(rank) + ")");
  }
  if (est.W.rows() != truth.W.rows() || est.H.cols() != truth.H.cols()) {
    throw DimensionError("align_factors: factor dimensions differ");
  }
  if (rank > kMaxAlignRank) throw InvalidArgument("align_factors: rank too large for exhaustive search");

  const std::size_t rows = truth.W.rows();
  // cost(p, q): squared distance between scaled est column q and truth column p.
  std::vector<double> cost(rank * rank), scale(rank * rank);
  for (std::size_t p = 0; p < rank; ++p) {
    double truth_sq = 0.0;
    for (std::size_t m = 0; m < rows; ++m) truth_sq += norm_sq(truth.W(m, p));
    for (std::size_t q = 0; q < rank; ++q) {
      double cross = 0.0, est_sq = 0.0;
      for (std::size_t m = 0; m < rows; ++m) {
        cross += dot4(est.W(m, q), truth.W(m, p));
        est_sq += norm_sq(est.W(m, q));
      }
      double s = est_sq > 0.0 ? cross / est_sq : 1.0;
      if (!(s > 0.0)) s = std::numeric_limits<double>::min();
      scale[p * rank + q] = s;
      cost[p * rank + q] = truth_sq - 2.0 * s * cross + s * s * est_sq;
    }
  }

  std::vector<std::size_t> perm(rank);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::size_t> best_perm = perm;
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t p = 0; p < rank; ++p) total += cost[p * rank + perm[p]];
    if (total < best) {
      best = total;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  Alignment out;
  out.permutation = best_perm;
  out.scales.resize(rank);
  out.aligned.W = QuaternionMatrix(rows, rank);
  out.aligned.H = RealMatrix(est.H.rows(), est.H.cols());
  for (std::size_t p = 0; p < rank; ++p) {
    const std::size_t q = best_perm[p];
    const double s = scale[p * rank + q];
    out.scales[p] = s;
    for (std::size_t m = 0; m < rows; ++m) out.aligned.W(m, p) = est.W(m, q) * s;
    out.aligned.H.row(static_cast<Eigen::Index>(p)) = est.H.row(static_cast<Eigen::Index>(q)) / s;
  }

  const double w_ref = frobenius_sq(truth.W);
  const double h_ref = truth.H.squaredNorm();
  out.error_w = frobenius_sq(out.aligned.W - truth.W) / (w_ref > 0.0 ? w_ref : 1.0);
  out.error_h = (out.aligned.H - truth.H).squaredNorm() / (h_ref > 0.0 ? h_ref : 1.0);
  return out;
}

}  // namespace qnmf
