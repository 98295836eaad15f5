#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "support.hpp"

using namespace mklh;
namespace ts = testing_support;

namespace {

Mat3 reconstruct(const SymEigen& e) {
  Mat3 r = Mat3::zero();
  for (std::size_t k = 0; k < 3; ++k) r = r + e.values[k] * outer(e.vectors.column(k)).to_mat3();
  return r;
}

double orthonormality_error(const Mat3& v) { return frobenius_norm(transpose(v) * v - Mat3::identity()); }

SymMat3 random_symmetric(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  return {g(rng), g(rng), g(rng), g(rng), g(rng), g(rng)};
}

}  // namespace

TEST(Eigh, DiagonalSortsAndPermutes) {
  const SymEigen e = eigh_sym3(SymMat3::diag(4, 9, 16));
  EXPECT_EQ(e.values[0], 16);
  EXPECT_EQ(e.values[1], 9);
  EXPECT_EQ(e.values[2], 4);
  EXPECT_EQ(e.vectors.column(0)[2], 1.0);
  EXPECT_EQ(e.vectors.column(1)[1], 1.0);
  EXPECT_EQ(e.vectors.column(2)[0], 1.0);
}

TEST(Eigh, Identity) {
  const SymEigen e = eigh_sym3(SymMat3::identity());
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(e.values[k], 1.0);
  EXPECT_LT(orthonormality_error(e.vectors), 1e-15);
}

TEST(Eigh, ZeroMatrix) {
  const SymEigen e = eigh_sym3(SymMat3::zero());
  EXPECT_EQ(norm(e.values), 0.0);
  EXPECT_LT(orthonormality_error(e.vectors), 1e-15);
}

TEST(Eigh, RandomSymmetricReconstructs) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const SymMat3 m = random_symmetric(rng);
    const SymEigen e = eigh_sym3(m);
    EXPECT_LT(frobenius_norm(reconstruct(e) - m.to_mat3()), 1e-9) << "draw " << i;
    EXPECT_LT(orthonormality_error(e.vectors), 1e-9) << "draw " << i;
    EXPECT_GE(e.values[0], e.values[1]);
    EXPECT_GE(e.values[1], e.values[2]);
  }
}

TEST(Eigh, RepeatedAndNearRepeatedEigenvalues) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 500; ++i) {
    const SymMat3 base = ts::random_spd(rng, 1.0, 1.0);  // all eigenvalues 1
    // rank-one bump on a random direction gives a double eigenvalue
    std::normal_distribution<double> g;
    Vec3 d{g(rng), g(rng), g(rng)};
    d = (1.0 / norm(d)) * d;
    const double bump = i % 2 ? 1e-7 * (i % 7) : 0.5;
    const SymMat3 m = base + bump * outer(d);
    const SymEigen e = eigh_sym3(m);
    EXPECT_LT(frobenius_norm(reconstruct(e) - m.to_mat3()), 1e-9) << "draw " << i;
    EXPECT_LT(orthonormality_error(e.vectors), 1e-9) << "draw " << i;
  }
}

TEST(Eigh, AgreesWithJacobiOracle) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 500; ++i) {
    const SymMat3 m = random_symmetric(rng, 3.0);
    std::array<double, 3> w{};
    ts::Dense v{};
    ts::jacobi(ts::dense(m.to_mat3()), w, v);
    std::sort(w.begin(), w.end(), std::greater<>());
    const SymEigen e = eigh_sym3(m);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(e.values[k], w[k], 1e-10);
  }
}

TEST(Eigh, NonFiniteThrows) {
  SymMat3 m = SymMat3::identity();
  m.xy = std::numeric_limits<double>::quiet_NaN();
  try {
    eigh_sym3(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonFinite);
  }
  m.xy = std::numeric_limits<double>::infinity();
  EXPECT_THROW(eigh_sym3(m), Error);
}

TEST(SqrtSpd, Examples) {
  EXPECT_LT(frobenius_norm(sqrt_spd(SymMat3::diag(4, 9, 16)).to_mat3() - Mat3::diag(2, 3, 4)), 1e-14);
  EXPECT_LT(frobenius_norm(sqrt_spd(SymMat3::identity()).to_mat3() - Mat3::identity()), 1e-15);
}

TEST(SqrtSpd, SquaresBackOverRandomDraws) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 1000; ++i) {
    const SymMat3 m = ts::random_spd(rng, 1e-6, 1.0);
    const Mat3 r = sqrt_spd(m).to_mat3();
    EXPECT_LT(frobenius_norm(r * r - m.to_mat3()), 1e-8) << "draw " << i;
    EXPECT_GE(eigh_sym3(SymMat3::from_mat3(r)).values[2], -1e-12);
  }
}

TEST(SqrtSpd, ClampsTinyNegativeAndRejectsLarger) {
  const SymMat3 slightly = SymMat3::diag(1.0, 0.5, -5e-10);
  const Mat3 r = sqrt_spd(slightly).to_mat3();
  EXPECT_EQ(r(2, 2), 0.0);
  try {
    sqrt_spd(SymMat3::diag(1.0, 0.5, -1e-6));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotPositiveSemidefinite);
  }
}

TEST(InvSqrtSpd, Examples) {
  EXPECT_LT(frobenius_norm(inv_sqrt_spd(SymMat3::diag(4, 4, 4)).to_mat3() - Mat3::diag(0.5, 0.5, 0.5)), 1e-15);
  EXPECT_LT(frobenius_norm(inv_sqrt_spd(SymMat3::identity()).to_mat3() - Mat3::identity()), 1e-15);
}

TEST(InvSqrtSpd, WhitensWellConditioned) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 1000; ++i) {
    const SymMat3 m = ts::random_spd(rng, 1e-5, 10.0);  // condition number < 1e6
    const Mat3 r = inv_sqrt_spd(m).to_mat3();
    EXPECT_LT(frobenius_norm(r * m.to_mat3() * r - Mat3::identity()), 1e-7) << "draw " << i;
  }
}

TEST(InvSqrtSpd, RankTwoWithRidge) {
  const Vec3 a{1, 2, 0.5}, b{-0.3, 0.1, 0.7};
  const SymMat3 m = outer(a) + outer(b);
  const double eps = 1e-6;
  const Mat3 r = inv_sqrt_spd(m, eps).to_mat3();
  ASSERT_TRUE(is_finite(r));
  const Mat3 ridged = (m + eps * SymMat3::identity()).to_mat3();
  EXPECT_LT(frobenius_norm(r * ridged * r - Mat3::identity()), 1e-7);
}

TEST(InvSqrtSpd, SingularThrows) {
  const SymMat3 m = outer(Vec3{1, 1, 1});
  try {
    inv_sqrt_spd(m, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingularCovariance);
  }
  EXPECT_THROW(inv_sqrt_spd(SymMat3::identity(), -1.0), Error);
}

TEST(OpNorm, Examples) {
  EXPECT_NEAR(op_norm(Mat3::diag(3, 1, 1)), 3.0, 1e-14);
  EXPECT_EQ(op_norm(Mat3::zero()), 0.0);
}

TEST(OpNorm, MatchesPowerIteration) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g;
  for (int i = 0; i < 300; ++i) {
    Mat3 m;
    for (double& x : m.m) x = g(rng);
    EXPECT_NEAR(op_norm(m), ts::power_op_norm(m), 1e-8 * std::max(1.0, op_norm(m))) << "draw " << i;
  }
}

TEST(OpNorm, SymmetricEqualsMaxAbsEigenvalue) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 300; ++i) {
    const SymMat3 m = random_symmetric(rng);
    const SymEigen e = eigh_sym3(m);
    EXPECT_NEAR(op_norm(m.to_mat3()), std::max(std::abs(e.values[0]), std::abs(e.values[2])), 1e-9);
  }
}

TEST(OpNorm, Submultiplicative) {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> g;
  for (int i = 0; i < 1000; ++i) {
    Mat3 a, b;
    for (double& x : a.m) x = g(rng);
    for (double& x : b.m) x = g(rng);
    EXPECT_LE(op_norm(a * b), op_norm(a) * op_norm(b) + 1e-9);
  }
}

TEST(SymMat3, FromMat3Symmetrizes) {
  Mat3 m;
  m.m = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  const SymMat3 s = SymMat3::from_mat3(m);
  EXPECT_EQ(s.xy, 3.0);
  EXPECT_EQ(s.xz, 5.0);
  EXPECT_EQ(s.yz, 7.0);
  EXPECT_EQ(s(1, 0), s(0, 1));
}
