#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qnmf/errors.hpp"
#include "qnmf/quaternion.hpp"
#include "qnmf/stokes.hpp"

namespace qnmf {

/// QNMF factors: W (M x P) entry-wise in the cone, H (P x N) non-negative.
struct QnmfFactors {
  QuaternionMatrix W;
  RealMatrix H;

  std::size_t rank() const { return W.cols(); }
  bool feasible(double tol = kConeTol) const {
    return in_cone(W, tol) && (H.size() == 0 || H.minCoeff() >= 0.0);
  }
};

struct SolverConfig {
  std::size_t rank = 1;
  std::size_t max_iters = 1000;
  double stop_delta = 1e-5;
  std::uint64_t seed = 0;
  std::size_t restarts = 1;
  double gram_ridge = 0.0;
  /// Worker threads for independent restarts; 0 means hardware concurrency.
  std::size_t threads = 0;

  void validate() const {
    if (rank < 1) throw ConfigError("rank", "must be >= 1");
    if (!(stop_delta > 0.0)) throw ConfigError("stop_delta", "must be > 0");
    if (!(gram_ridge >= 0.0)) throw ConfigError("gram_ridge", "must be >= 0");
    if (restarts < 1) throw ConfigError("restarts", "must be >= 1");
  }

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct SolveReport {
  QnmfFactors factors;
  /// Relative error eps_r = ||X - W_r H_r||^2 / ||X||^2, starting at the initial point.
  std::vector<double> residual_trace;
  std::size_t iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  /// Rows of H (sources) that are identically zero in the final iterate.
  std::size_t zero_activation_rows = 0;
  /// Columns of H (pixels) that are identically zero in the final iterate.
  std::size_t zero_activation_cols = 0;

  double final_error() const {
    return residual_trace.empty() ? std::numeric_limits<double>::infinity() : residual_trace.back();
  }
};

namespace detail {

inline void require_conformable(const QuaternionMatrix& X, const QuaternionMatrix& W, const RealMatrix& H,
                                const char* op) {
  if (W.rows() != X.rows() || static_cast<std::size_t>(H.cols()) != X.cols() ||
      static_cast<std::size_t>(H.rows()) != W.cols()) {
    throw DimensionError(std::string(op) + ": expected X (MxN) = W (MxP) H (PxN), got X " +
                         std::to_string(X.rows()) + "x" + std::to_string(X.cols()) + ", W " +
                         std::to_string(W.rows()) + "x" + std::to_string(W.cols()) + ", H " +
                         std::to_string(H.rows()) + "x" + std::to_string(H.cols()));
  }
}

/// Solves (G + ridge I) Z = B for symmetric positive semi-definite G.
inline RealMatrix solve_normal(const RealMatrix& gram, const RealMatrix& rhs, double ridge, const char* op) {
  RealMatrix g = gram;
  g.diagonal().array() += ridge;
  Eigen::LLT<RealMatrix> llt(g);
  const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  if (llt.info() != Eigen::Success || !(rcond > 1e-14)) {
    throw SingularMatrixError(std::string(op) + ": normal matrix is singular (rcond " + std::to_string(rcond) +
                              "); set a positive gram_ridge");
  }
  return llt.solve(rhs);
}

/// Re[W^T conj(W)]: the real Gram matrix of the columns of W viewed in R^4.
inline RealMatrix real_gram(const Planes& w) {
  RealMatrix g = w[0].transpose() * w[0];
  for (std::size_t c = 1; c < 4; ++c) g.noalias() += w[c].transpose() * w[c];
  return g;
}

/// Re[W^T conj(X)].
inline RealMatrix real_cross(const Planes& w, const Planes& x) {
  RealMatrix b = w[0].transpose() * x[0];
  for (std::size_t c = 1; c < 4; ++c) b.noalias() += w[c].transpose() * x[c];
  return b;
}

inline Planes unconstrained_w(const Planes& x, const RealMatrix& h, double ridge) {
  const RealMatrix hht = h * h.transpose();
  Planes out;
  // W* = X H^T (H H^T)^{-1}; solve per plane with the symmetric system on the right.
  for (std::size_t c = 0; c < 4; ++c) {
    const RealMatrix xht = x[c] * h.transpose();
    out[c] = solve_normal(hht, xht.transpose(), ridge, "update_w").transpose();
  }
  return out;
}

}  // namespace detail

/// ||X - W H||_F^2.
inline double euclidean_cost(const QuaternionMatrix& X, const QuaternionMatrix& W, const RealMatrix& H) {
  detail::require_conformable(X, W, H, "euclidean_cost");
  return frobenius_sq(X - matmul(W, H));
}

/// Gradient of the Euclidean cost with respect to H: -2 Re[W^T conj(X - W H)].
inline RealMatrix grad_h(const QuaternionMatrix& X, const QuaternionMatrix& W, const RealMatrix& H) {
  detail::require_conformable(X, W, H, "grad_h");
  return -2.0 * real_part(matmul(transpose(W), conj(X - matmul(W, H))));
}

/// Gradient with respect to conj(W) in the generalized HR sense: -1/2 (X - W H) H^T.
/// The real partial derivatives over the four components of w_mp are
/// 4x the corresponding components of this matrix.
inline QuaternionMatrix grad_w_conj(const QuaternionMatrix& X, const QuaternionMatrix& W, const RealMatrix& H) {
  detail::require_conformable(X, W, H, "grad_w_conj");
  const RealMatrix ht = H.transpose();
  QuaternionMatrix g = matmul(X - matmul(W, H), ht);
  for (auto& e : g.entries()) e *= -0.5;
  return g;
}

/// Unconstrained least-squares minimizer in H, before clipping.
inline RealMatrix unconstrained_h(const QuaternionMatrix& X, const QuaternionMatrix& W, double gram_ridge = 0.0) {
  if (W.rows() != X.rows()) throw DimensionError("update_h: W and X row counts differ");
  const Planes w = to_planes(W);
  const Planes x = to_planes(X);
  return detail::solve_normal(detail::real_gram(w), detail::real_cross(w, x), gram_ridge, "update_h");
}

/// H update: clip[(Re[W^T conj W] + ridge I)^{-1} Re[W^T conj X]].
inline RealMatrix update_h(const QuaternionMatrix& X, const QuaternionMatrix& W, double gram_ridge = 0.0) {
  return project_nonneg(unconstrained_h(X, W, gram_ridge));
}

/// Unconstrained least-squares minimizer in W, before projection: X H^T (H H^T + ridge I)^{-1}.
inline QuaternionMatrix unconstrained_w(const QuaternionMatrix& X, const RealMatrix& H, double gram_ridge = 0.0) {
  if (static_cast<std::size_t>(H.cols()) != X.cols()) {
    throw DimensionError("update_w: H and X column counts differ");
  }
  return from_planes(detail::unconstrained_w(to_planes(X), H, gram_ridge));
}

inline QuaternionMatrix update_w(const QuaternionMatrix& X, const RealMatrix& H, double gram_ridge = 0.0) {
  return project_cone(unconstrained_w(X, H, gram_ridge));
}

/// Random starting point: W entries from an isotropic 4-component standard
/// normal, projected onto the cone; H entries uniform on [0, 1].
inline QnmfFactors random_init(std::size_t rows, std::size_t rank, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  QnmfFactors f{QuaternionMatrix(rows, rank), RealMatrix(static_cast<Eigen::Index>(rank), static_cast<Eigen::Index>(cols))};
  for (auto& e : f.W.entries()) {
    const double r = normal(rng);
    const double i = normal(rng);
    const double j = normal(rng);
    const double k = normal(rng);
    e = project_cone(Quaternion{r, i, j, k});
  }
  for (Eigen::Index p = 0; p < f.H.rows(); ++p)
    for (Eigen::Index n = 0; n < f.H.cols(); ++n) f.H(p, n) = uniform(rng);
  return f;
}

namespace detail {

inline std::size_t count_zero_rows(const RealMatrix& h) {
  std::size_t count = 0;
  for (Eigen::Index p = 0; p < h.rows(); ++p)
    if ((h.row(p).array() == 0.0).all()) ++count;
  return count;
}

inline std::size_t count_zero_cols(const RealMatrix& h) {
  std::size_t count = 0;
  for (Eigen::Index n = 0; n < h.cols(); ++n)
    if ((h.col(n).array() == 0.0).all()) ++count;
  return count;
}

// ||X - W H||^2 from small Gram quantities: ||X||^2 - 2 <W, X H^T> + <W^T W, H H^T>,
// with XH^T supplied per plane.
inline double residual_from_grams(double x_norm_sq, const Planes& w, const Planes& xht, const RealMatrix& hht) {
  double cross = 0.0;
  for (std::size_t c = 0; c < 4; ++c) cross += (w[c].array() * xht[c].array()).sum();
  const RealMatrix g = real_gram(w);
  const double quad = (g.array() * hht.array()).sum();
  return std::max(0.0, x_norm_sq - 2.0 * cross + quad);
}

}  // namespace detail

/// Quaternion alternating least squares from a seeded random start.
/// Each iteration applies the H update then the W update, and stops once the
/// relative error changes by at most stop_delta.
inline SolveReport solve_from(const QuaternionMatrix& X, QnmfFactors init, const SolverConfig& config) {
  config.validate();
  detail::require_conformable(X, init.W, init.H, "solve");
  const Planes x = to_planes(X);
  const double x_norm_sq = frobenius_sq(X);
  if (!(x_norm_sq > 0.0)) throw InvalidArgument("solve: data matrix is zero");

  SolveReport report;
  report.seed = config.seed;
  Planes w = to_planes(init.W);
  RealMatrix h = std::move(init.H);

  const auto relative_error = [&](const Planes& wp, const RealMatrix& hp) {
    RealMatrix hht = hp * hp.transpose();
    Planes xht;
    for (std::size_t c = 0; c < 4; ++c) xht[c] = x[c] * hp.transpose();
    return detail::residual_from_grams(x_norm_sq, wp, xht, hht) / x_norm_sq;
  };

  report.residual_trace.push_back(relative_error(w, h));
  for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
    h = project_nonneg(detail::solve_normal(detail::real_gram(w), detail::real_cross(w, x), config.gram_ridge,
                                            "update_h"));
    Planes w_ls = detail::unconstrained_w(x, h, config.gram_ridge);
    QuaternionMatrix w_proj = project_cone(from_planes(w_ls));
    w = to_planes(w_proj);

    const double eps = relative_error(w, h);
    if (!std::isfinite(eps)) {
      throw NumericalError("solve: non-finite residual at iteration " + std::to_string(iter) + " (seed " +
                           std::to_string(config.seed) + ")");
    }
    const double prev = report.residual_trace.back();
    report.residual_trace.push_back(eps);
    report.iterations = iter;
    if (std::abs(eps - prev) <= config.stop_delta) {
      report.converged = true;
      break;
    }
  }
  report.factors.W = from_planes(w);
  report.factors.H = std::move(h);
  report.zero_activation_rows = detail::count_zero_rows(report.factors.H);
  report.zero_activation_cols = detail::count_zero_cols(report.factors.H);
  return report;
}

inline SolveReport solve(const QuaternionMatrix& X, const SolverConfig& config) {
  return solve_from(X, random_init(X.rows(), config.rank, X.cols(), config.seed), config);
}

/// Outcome of one restart inside solve_multistart.
struct RestartOutcome {
  std::uint64_t seed = 0;
  std::optional<SolveReport> report;
  std::string error;
  std::exception_ptr failure;
};

struct MultiStartReport {
  std::vector<RestartOutcome> restarts;
  std::size_t best = 0;

  const SolveReport& best_report() const { return *restarts.at(best).report; }
};

/// Seed of restart `index` for a base seed.
constexpr std::uint64_t restart_seed(std::uint64_t base, std::size_t index) {
  return base + static_cast<std::uint64_t>(index);
}

/// Runs `config.restarts` independent solves with seeds seed, seed+1, ... and
/// selects the smallest final relative error (lowest seed on ties). Restarts
/// that raise a library error are recorded and skipped; if all fail the first
/// error is rethrown.
inline MultiStartReport solve_multistart(const QuaternionMatrix& X, const SolverConfig& config) {
  config.validate();
  const std::size_t workers =
      config.threads != 0 ? config.threads : std::max<std::size_t>(1, std::thread::hardware_concurrency());

  MultiStartReport out;
  out.restarts.resize(config.restarts);
  const auto run_one = [&X, &config](std::size_t index) {
    RestartOutcome outcome;
    SolverConfig local = config;
    local.seed = restart_seed(config.seed, index);
    outcome.seed = local.seed;
    try {
      outcome.report = solve(X, local);
    } catch (const Error& e) {
      outcome.error = e.what();
      outcome.failure = std::current_exception();
    }
    return outcome;
  };

  if (workers <= 1) {
    for (std::size_t r = 0; r < config.restarts; ++r) out.restarts[r] = run_one(r);
  } else {
    for (std::size_t start = 0; start < config.restarts; start += workers) {
      const std::size_t stop = std::min(config.restarts, start + workers);
      std::vector<std::future<RestartOutcome>> batch;
      for (std::size_t r = start; r < stop; ++r) batch.push_back(std::async(std::launch::async, run_one, r));
      for (std::size_t r = start; r < stop; ++r) out.restarts[r] = batch[r - start].get();
    }
  }

  std::optional<std::size_t> best;
  for (std::size_t r = 0; r < out.restarts.size(); ++r) {
    const auto& rep = out.restarts[r].report;
    if (!rep) continue;
    if (!best || rep->final_error() < out.restarts[*best].report->final_error()) best = r;
  }
  if (!best) std::rethrow_exception(out.restarts[0].failure);
  out.best = *best;
  return out;
}

}  // namespace qnmf
