#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "qnmf/errors.hpp"
#include "qnmf/quaternion.hpp"

using namespace qnmf;
using Catch::Matchers::WithinAbs;

TEST_CASE("basis units follow the Hamilton rules", "[quaternion]") {
  const Quaternion i = Quaternion::i(), j = Quaternion::j(), k = Quaternion::k();
  CHECK(i * j == k);
  CHECK(j * k == i);
  CHECK(k * i == j);
  CHECK(j * i == -k);
  CHECK(i * i == Quaternion(-1.0));
  CHECK(j * j == Quaternion(-1.0));
  CHECK(k * k == Quaternion(-1.0));
  CHECK(i * j * k == Quaternion(-1.0));
}

TEST_CASE("product matches the left-multiplication matrix", "[quaternion]") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const Quaternion p = oracle::random_quaternion(rng), q = oracle::random_quaternion(rng);
    CHECK(approx_equal(p * q, oracle::mul(p, q), 1e-13));
  }
}

TEST_CASE("algebraic identities hold on random quaternions", "[quaternion]") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 200; ++t) {
    const Quaternion p = oracle::random_quaternion(rng), q = oracle::random_quaternion(rng),
                     r = oracle::random_quaternion(rng);
    CHECK(approx_equal((p * q) * r, p * (q * r), 1e-12));
    CHECK_THAT(abs(p * q), WithinAbs(abs(p) * abs(q), 1e-12));
    CHECK(approx_equal(conj(p * q), conj(q) * conj(p), 1e-13));
    CHECK_THAT(norm_sq(p), WithinAbs((p * conj(p)).re, 1e-13));
    CHECK_THAT(dot4(p, q), WithinAbs((p * conj(q)).re, 1e-13));
  }
}

TEST_CASE("division by a scalar and component access", "[quaternion]") {
  const Quaternion q{2.0, -4.0, 6.0, 8.0};
  CHECK(q / 2.0 == Quaternion(1.0, -2.0, 3.0, 4.0));
  CHECK(component(q, Component::re) == 2.0);
  CHECK(component(q, Component::i) == -4.0);
  CHECK(component(q, Component::j) == 6.0);
  CHECK(component(q, Component::k) == 8.0);
  CHECK(imag(q) == Quaternion(0.0, -4.0, 6.0, 8.0));
  CHECK(imag_norm_sq(q) == 116.0);
}

namespace {

QuaternionMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  QuaternionMatrix m(r, c);
  for (auto& e : m.entries()) e = oracle::random_quaternion(rng);
  return m;
}

}  // namespace

TEST_CASE("matrix product matches an explicit triple loop", "[quaternion][matrix]") {
  std::mt19937_64 rng(13);
  const QuaternionMatrix A = random_matrix(rng, 3, 4), B = random_matrix(rng, 4, 2);
  const QuaternionMatrix C = matmul(A, B);
  REQUIRE(C.rows() == 3);
  REQUIRE(C.cols() == 2);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      Quaternion acc;
      for (std::size_t k = 0; k < 4; ++k) acc += oracle::mul(A(r, k), B(k, c));
      CHECK(approx_equal(C(r, c), acc, 1e-12));
    }
}

TEST_CASE("real right factor acts component-wise", "[quaternion][matrix]") {
  std::mt19937_64 rng(14);
  const QuaternionMatrix W = random_matrix(rng, 5, 3);
  const RealMatrix H = RealMatrix::Random(3, 4);
  const QuaternionMatrix X = matmul(W, H);
  CHECK(approx_equal(X, matmul(W, from_real(H)), 1e-13));
  const Planes w = to_planes(W), x = to_planes(X);
  for (std::size_t c = 0; c < 4; ++c) CHECK((x[c] - w[c] * H).norm() < 1e-13);
}

TEST_CASE("conjugate transpose reverses products", "[quaternion][matrix]") {
  std::mt19937_64 rng(15);
  const QuaternionMatrix A = random_matrix(rng, 3, 4), B = random_matrix(rng, 4, 2);
  CHECK(approx_equal(dagger(matmul(A, B)), matmul(dagger(B), dagger(A)), 1e-12));
  CHECK(dagger(dagger(A)) == A);
  CHECK(transpose(transpose(A)) == A);
  CHECK(conj(conj(A)) == A);
}

TEST_CASE("planes round-trip and Frobenius norm", "[quaternion][matrix]") {
  std::mt19937_64 rng(16);
  const QuaternionMatrix A = random_matrix(rng, 4, 3);
  CHECK(from_planes(to_planes(A)) == A);
  double sum = 0.0;
  for (const auto& e : A.entries()) sum += e.re * e.re + e.im_i * e.im_i + e.im_j * e.im_j + e.im_k * e.im_k;
  CHECK_THAT(frobenius_sq(A), WithinAbs(sum, 1e-12));
  CHECK(real_part(A) == to_planes(A)[0]);
  CHECK(approx_equal(from_real(real_part(A)) + imag_part(A), A, 0.0));
}

TEST_CASE("identity is neutral for the matrix product", "[quaternion][matrix]") {
  std::mt19937_64 rng(17);
  const QuaternionMatrix A = random_matrix(rng, 3, 3);
  CHECK(approx_equal(matmul(A, QuaternionMatrix::identity(3)), A, 0.0));
  CHECK(approx_equal(matmul(QuaternionMatrix::identity(3), A), A, 0.0));
}

TEST_CASE("dimension mismatches throw", "[quaternion][matrix]") {
  const QuaternionMatrix A(2, 3), B(2, 3);
  CHECK_THROWS_AS(matmul(A, B), DimensionError);
  CHECK_THROWS_AS(matmul(A, RealMatrix::Zero(2, 2)), DimensionError);
  CHECK_THROWS_AS(A + QuaternionMatrix(3, 2), DimensionError);
  CHECK_THROWS_AS(A - QuaternionMatrix(2, 2), DimensionError);
}
