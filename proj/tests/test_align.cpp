#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "qnmf/align.hpp"

using namespace qnmf;

namespace {

QnmfFactors random_factors(std::mt19937_64& rng, std::size_t M, std::size_t P, std::size_t N) {
  QnmfFactors f{QuaternionMatrix(M, P), RealMatrix(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(N))};
  for (auto& w : f.W.entries()) w = oracle::random_cone_member(rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < f.H.size(); ++i) f.H.data()[i] = u(rng);
  return f;
}

}  // namespace

TEST_CASE("permuted and scaled truth aligns with zero error", "[align]") {
  std::mt19937_64 rng(51);
  const QnmfFactors truth = random_factors(rng, 6, 3, 9);
  const std::vector<std::size_t> perm{2, 0, 1};
  const std::vector<double> scale{0.5, 3.0, 1.7};
  QnmfFactors est{QuaternionMatrix(6, 3), RealMatrix(3, 9)};
  for (std::size_t q = 0; q < 3; ++q) {
    const std::size_t p = perm[q];
    for (std::size_t m = 0; m < 6; ++m) est.W(m, q) = truth.W(m, p) * scale[q];
    est.H.row(static_cast<Eigen::Index>(q)) = truth.H.row(static_cast<Eigen::Index>(p)) / scale[q];
  }
  const Alignment a = align_factors(est, truth);
  CHECK(a.error_w < 1e-28);
  CHECK(a.error_h < 1e-28);
  for (std::size_t p = 0; p < 3; ++p) {
    CHECK(perm[a.permutation[p]] == p);
    CHECK(std::abs(a.scales[p] * scale[a.permutation[p]] - 1.0) < 1e-12);
  }
}

TEST_CASE("alignment error is relative squared Frobenius", "[align]") {
  std::mt19937_64 rng(52);
  const QnmfFactors truth = random_factors(rng, 5, 2, 4);
  QnmfFactors est = truth;
  est.H *= 1.1;
  const Alignment a = align_factors(est, truth);
  CHECK(a.error_w < 1e-28);
  CHECK(std::abs(a.error_h - 0.01) < 1e-12);
}

TEST_CASE("alignment rejects mismatched shapes", "[align]") {
  std::mt19937_64 rng(53);
  const QnmfFactors a = random_factors(rng, 5, 2, 4);
  CHECK_THROWS_AS(align_factors(random_factors(rng, 5, 3, 4), a), DimensionError);
  CHECK_THROWS_AS(align_factors(random_factors(rng, 6, 2, 4), a), DimensionError);
  CHECK_THROWS_AS(align_factors(random_factors(rng, 5, 2, 5), a), DimensionError);
}
