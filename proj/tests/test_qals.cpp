#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "qnmf/qals.hpp"
#include "qnmf/synth.hpp"

using namespace qnmf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Instance {
  QuaternionMatrix X, W;
  RealMatrix H;
};

Instance random_instance(std::mt19937_64& rng, std::size_t M, std::size_t P, std::size_t N) {
  Instance in{QuaternionMatrix(M, N), QuaternionMatrix(M, P), RealMatrix(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(N))};
  for (auto& e : in.X.entries()) e = oracle::random_quaternion(rng);
  for (auto& e : in.W.entries()) e = oracle::random_quaternion(rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < in.H.size(); ++i) in.H.data()[i] = u(rng);
  return in;
}

Quaternion& entry(QuaternionMatrix& m, std::size_t r, std::size_t c) { return m(r, c); }

double& comp(Quaternion& q, int c) {
  switch (c) {
    case 0: return q.re;
    case 1: return q.im_i;
    case 2: return q.im_j;
    default: return q.im_k;
  }
}

}  // namespace

TEST_CASE("cost equals the component-plane sum", "[qals]") {
  std::mt19937_64 rng(31);
  const Instance in = random_instance(rng, 5, 3, 7);
  CHECK_THAT(euclidean_cost(in.X, in.W, in.H), WithinRel(oracle::cost(in.X, in.W, in.H), 1e-12));
}

TEST_CASE("one-by-one gradients", "[qals][gradient]") {
  QuaternionMatrix X(1, 1), W(1, 1);
  X(0, 0) = Quaternion(3.0);
  W(0, 0) = Quaternion(1.0);
  RealMatrix H(1, 1);
  H(0, 0) = 2.0;
  CHECK_THAT(grad_h(X, W, H)(0, 0), WithinAbs(-2.0, 1e-15));
  CHECK(grad_w_conj(X, W, H)(0, 0) == Quaternion(-1.0));
}

TEST_CASE("gradients match central differences", "[qals][gradient]") {
  std::mt19937_64 rng(32);
  const double step = 1e-6;
  for (int t = 0; t < 5; ++t) {
    Instance in = random_instance(rng, 4, 3, 5);
    const RealMatrix gh = grad_h(in.X, in.W, in.H);
    for (Eigen::Index i = 0; i < in.H.size(); ++i) {
      RealMatrix hp = in.H, hm = in.H;
      hp.data()[i] += step;
      hm.data()[i] -= step;
      const double fd = (oracle::cost(in.X, in.W, hp) - oracle::cost(in.X, in.W, hm)) / (2.0 * step);
      CHECK(std::abs(fd - gh.data()[i]) <= 1e-6 * std::max(1.0, std::abs(gh.data()[i])));
    }
    // Real partial derivative of the cost in each component of w_mp is 4x the
    // matching component of the conjugate-variable gradient.
    const QuaternionMatrix gw = grad_w_conj(in.X, in.W, in.H);
    for (std::size_t m = 0; m < in.W.rows(); ++m)
      for (std::size_t p = 0; p < in.W.cols(); ++p)
        for (int c = 0; c < 4; ++c) {
          QuaternionMatrix wp = in.W, wm = in.W;
          comp(entry(wp, m, p), c) += step;
          comp(entry(wm, m, p), c) -= step;
          const double fd = (oracle::cost(in.X, wp, in.H) - oracle::cost(in.X, wm, in.H)) / (2.0 * step);
          Quaternion g = gw(m, p);
          const double analytic = 4.0 * comp(g, c);
          CHECK(std::abs(fd - analytic) <= 1e-6 * std::max(1.0, std::abs(analytic)));
        }
  }
}

TEST_CASE("unconstrained updates match a QR least-squares oracle", "[qals]") {
  std::mt19937_64 rng(33);
  const Instance in = random_instance(rng, 6, 3, 8);
  CHECK((unconstrained_h(in.X, in.W) - oracle::ls_h(in.X, in.W)).norm() < 1e-10);
  CHECK(approx_equal(unconstrained_w(in.X, in.H), oracle::ls_w(in.X, in.H), 1e-10));
}

TEST_CASE("unconstrained updates are stationary points", "[qals][gradient]") {
  std::mt19937_64 rng(34);
  const Instance in = random_instance(rng, 4, 3, 5);
  const RealMatrix h_star = unconstrained_h(in.X, in.W);
  const RealMatrix zero_h = RealMatrix::Zero(3, 5);
  CHECK(grad_h(in.X, in.W, h_star).norm() <= 1e-10 * grad_h(in.X, in.W, zero_h).norm());
  const QuaternionMatrix w_star = unconstrained_w(in.X, in.H);
  const QuaternionMatrix zero_w(4, 3);
  CHECK(frobenius_sq(grad_w_conj(in.X, w_star, in.H)) <= 1e-20 * frobenius_sq(grad_w_conj(in.X, zero_w, in.H)));
}

TEST_CASE("projected updates land in the constraint sets", "[qals]") {
  std::mt19937_64 rng(35);
  const Instance in = random_instance(rng, 6, 3, 8);
  const RealMatrix h = update_h(in.X, in.W);
  CHECK(h.minCoeff() >= 0.0);
  CHECK(in_cone(update_w(in.X, in.H)));
  CHECK((h - unconstrained_h(in.X, in.W).cwiseMax(0.0)).norm() == 0.0);
}

TEST_CASE("singular Gram matrices are reported unless a ridge is added", "[qals]") {
  QuaternionMatrix X(2, 2), W(2, 2);
  for (auto& e : X.entries()) e = Quaternion(1.0, 0.1, 0.0, 0.0);
  W(0, 0) = W(1, 0) = Quaternion(1.0);  // second column zero
  CHECK_THROWS_AS(update_h(X, W), SingularMatrixError);
  CHECK_NOTHROW(update_h(X, W, 1e-6));
  CHECK_THROWS_AS(update_w(X, RealMatrix::Zero(2, 2)), SingularMatrixError);
}

TEST_CASE("random initialization is feasible and seeded", "[qals]") {
  const QnmfFactors a = random_init(10, 3, 20, 5);
  const QnmfFactors b = random_init(10, 3, 20, 5);
  const QnmfFactors c = random_init(10, 3, 20, 6);
  CHECK(a.feasible());
  CHECK(a.H.maxCoeff() <= 1.0);
  CHECK(a.W == b.W);
  CHECK(a.H == b.H);
  CHECK_FALSE(a.W == c.W);
}

TEST_CASE("solver output is feasible and the stop rule is honored", "[qals][solver]") {
  const synth::Dataset d = synth::three_source_dataset(32, 12, 12, 1);
  SolverConfig cfg;
  cfg.rank = 3;
  cfg.seed = 4;
  const SolveReport r = solve(d.X, cfg);
  CHECK(r.factors.feasible());
  REQUIRE(r.residual_trace.size() == r.iterations + 1);
  REQUIRE(r.converged);
  const auto& tr = r.residual_trace;
  CHECK(std::abs(tr[tr.size() - 1] - tr[tr.size() - 2]) <= cfg.stop_delta);
  for (std::size_t i = 1; i + 1 < tr.size(); ++i) CHECK(std::abs(tr[i] - tr[i - 1]) > cfg.stop_delta);
  CHECK_THAT(r.final_error(), WithinRel(euclidean_cost(d.X, r.factors.W, r.factors.H) / frobenius_sq(d.X), 1e-8));
}

TEST_CASE("solver is deterministic per seed", "[qals][solver]") {
  const synth::Dataset d = synth::three_source_dataset(24, 10, 10, 2);
  SolverConfig cfg;
  cfg.rank = 3;
  cfg.seed = 9;
  const SolveReport a = solve(d.X, cfg), b = solve(d.X, cfg);
  CHECK(a.residual_trace == b.residual_trace);
  CHECK(a.factors.W == b.factors.W);
  CHECK(a.factors.H == b.factors.H);
}

TEST_CASE("exact data is fitted to a small residual", "[qals][solver]") {
  const synth::Dataset d = synth::three_source_dataset(48, 16, 16, 3);
  SolverConfig cfg;
  cfg.rank = 3;
  cfg.stop_delta = 1e-12;
  cfg.max_iters = 2000;
  const SolveReport r = solve(d.X, cfg);
  CHECK(r.final_error() < 1e-6);
}

TEST_CASE("multistart seeds, selection and thread independence", "[qals][solver]") {
  const synth::Dataset d = synth::three_source_dataset(24, 10, 10, 5);
  SolverConfig cfg;
  cfg.rank = 3;
  cfg.seed = 100;
  cfg.restarts = 4;
  cfg.threads = 1;
  const MultiStartReport serial = solve_multistart(d.X, cfg);
  cfg.threads = 3;
  const MultiStartReport parallel = solve_multistart(d.X, cfg);
  REQUIRE(serial.restarts.size() == 4);
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(serial.restarts[r].seed == 100 + r);
    REQUIRE(serial.restarts[r].report);
    CHECK(serial.restarts[r].report->residual_trace == parallel.restarts[r].report->residual_trace);
    CHECK(serial.best_report().final_error() <= serial.restarts[r].report->final_error());
  }
  CHECK(serial.best == parallel.best);
}

TEST_CASE("multistart rethrows when every restart fails", "[qals][solver]") {
  // Four real equations per row cannot determine five sources.
  QuaternionMatrix X(1, 6);
  for (auto& e : X.entries()) e = Quaternion(1.0, 0.2, 0.1, 0.0);
  SolverConfig cfg;
  cfg.rank = 5;
  cfg.restarts = 2;
  cfg.threads = 1;
  CHECK_THROWS_AS(solve_multistart(X, cfg), SingularMatrixError);
}

TEST_CASE("solver config validation", "[qals]") {
  SolverConfig cfg;
  cfg.rank = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.stop_delta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.gram_ridge = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("data matrix dimensions are checked", "[qals]") {
  CHECK_THROWS_AS(euclidean_cost(QuaternionMatrix(3, 4), QuaternionMatrix(3, 2), RealMatrix(3, 4)), DimensionError);
  CHECK_THROWS_AS(grad_h(QuaternionMatrix(3, 4), QuaternionMatrix(2, 2), RealMatrix(2, 4)), DimensionError);
}
