#include <gtest/gtest.h>

#include <random>

#include "bskpd/tensor.hpp"
#include "test_util.hpp"

using namespace bskpd;

TEST(DenseTensor, FirstIndexFastestLayout) {
  DenseTensor3 t({2, 3, 4});
  for (std::size_t n = 0; n < t.size(); ++n) t.values()[n] = static_cast<double>(n);
  EXPECT_EQ(t(1, 0, 0), 1.0);
  EXPECT_EQ(t(0, 1, 0), 2.0);
  EXPECT_EQ(t(0, 0, 1), 6.0);
  EXPECT_EQ(t(1, 2, 3), 1.0 + 2.0 * 2 + 6.0 * 3);
}

TEST(DenseTensor, RejectsZeroDimsAndWrongPayload) {
  EXPECT_THROW(DenseTensor3({0, 1, 1}), ShapeError);
  EXPECT_THROW(DenseTensor3({2, 2, 1}, std::vector<double>(3)), ShapeError);
}

TEST(Vec3, MatchesOffsets) {
  std::mt19937_64 eng(1);
  const auto t = testutil::random_tensor(eng, {3, 2, 2});
  const Vector v = vec3(t);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t i = 0; i < 3; ++i)
        EXPECT_EQ(v[static_cast<Eigen::Index>(i + 3 * j + 6 * k)], t(i, j, k));
}

TEST(Kron, HandExample) {
  // a = [1 2] along mode 1, b = [3 4] along mode 1 -> [3 4 6 8].
  const DenseTensor3 a({2, 1, 1}, {1, 2});
  const DenseTensor3 b({2, 1, 1}, {3, 4});
  const DenseTensor3 c = kron_tensor(a, b);
  EXPECT_EQ(c.dims(), (Dims3{4, 1, 1}));
  EXPECT_EQ(std::vector<double>(c.values().begin(), c.values().end()),
            (std::vector<double>{3, 4, 6, 8}));
}

TEST(Kron, ScalarFactorsAreIdentities) {
  std::mt19937_64 eng(2);
  const auto b = testutil::random_tensor(eng, {2, 3, 2});
  const DenseTensor3 one({1, 1, 1}, {1.0});
  EXPECT_EQ(kron_tensor(one, b), b);
  EXPECT_EQ(kron_tensor(b, one), b);
}

TEST(Unfold, HandExample2D) {
  // 4 x 4 image with 2 x 2 blocks: block (k1, k2) holds rows 2k1.., cols 2k2..
  DenseTensor3 c({4, 4, 1});
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 4; ++i) c(i, j, 0) = static_cast<double>(10 * i + j);
  const BlockShape s{{2, 2, 1}, {2, 2, 1}};
  const Matrix m = unfold(c, s);
  ASSERT_EQ(m.rows(), 4);
  ASSERT_EQ(m.cols(), 4);
  for (std::size_t k2 = 0; k2 < 2; ++k2)
    for (std::size_t k1 = 0; k1 < 2; ++k1)
      for (std::size_t j2 = 0; j2 < 2; ++j2)
        for (std::size_t j1 = 0; j1 < 2; ++j1)
          EXPECT_EQ(m(static_cast<Eigen::Index>(k1 + 2 * k2), static_cast<Eigen::Index>(j1 + 2 * j2)),
                    c(2 * k1 + j1, 2 * k2 + j2, 0));
}

TEST(Unfold, KroneckerIdentityRandomShapes) {
  std::mt19937_64 eng(3);
  for (int trial = 0; trial < 100; ++trial) {
    BlockShape s;
    for (std::size_t m = 0; m < 3; ++m) {
      s.p[m] = testutil::rand_extent(eng, 3);
      s.d[m] = testutil::rand_extent(eng, 3);
    }
    const auto a = testutil::random_tensor(eng, s.p);
    const auto b = testutil::random_tensor(eng, s.d);
    const Matrix lhs = unfold(kron_tensor(a, b), s);
    const Matrix rhs = vec3(a) * vec3(b).transpose();
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Unfold, RefoldInvertsExactly) {
  std::mt19937_64 eng(4);
  for (int trial = 0; trial < 50; ++trial) {
    BlockShape s;
    for (std::size_t m = 0; m < 3; ++m) {
      s.p[m] = testutil::rand_extent(eng, 4);
      s.d[m] = testutil::rand_extent(eng, 4);
    }
    const auto c = testutil::random_tensor(eng, s.full());
    EXPECT_EQ(refold(unfold(c, s), s), c);
  }
}

TEST(Unfold, ShapeErrors) {
  const DenseTensor3 c({4, 4, 1});
  EXPECT_THROW(unfold(c, BlockShape{{3, 1, 1}, {1, 4, 1}}), ShapeError);
  EXPECT_THROW(refold(Matrix::Zero(3, 3), BlockShape{{2, 1, 1}, {2, 1, 1}}), ShapeError);
}

TEST(Bilinear, EqualsTensorInnerProduct) {
  std::mt19937_64 eng(5);
  for (int trial = 0; trial < 50; ++trial) {
    BlockShape s;
    for (std::size_t m = 0; m < 3; ++m) {
      s.p[m] = testutil::rand_extent(eng, 3);
      s.d[m] = testutil::rand_extent(eng, 3);
    }
    const auto rank = static_cast<Eigen::Index>(testutil::rand_extent(eng, 3));
    const auto x = testutil::random_tensor(eng, s.full());
    const Matrix a = testutil::random_matrix(eng, static_cast<Eigen::Index>(s.rows()), rank);
    const Matrix b = testutil::random_matrix(eng, static_cast<Eigen::Index>(s.cols()), rank);
    // C = A B^T refolded; <X, C> computed on the tensors directly.
    const DenseTensor3 c = refold(a * b.transpose(), s);
    double direct = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) direct += x.values()[n] * c.values()[n];
    EXPECT_NEAR(bilinear_inner(unfold(x, s), a, b), direct, 1e-10 * (1.0 + std::fabs(direct)));
    EXPECT_NEAR(inner(x, c), direct, 1e-10 * (1.0 + std::fabs(direct)));
  }
}

TEST(Bilinear, RejectsMismatchedFactors) {
  EXPECT_THROW(bilinear_inner(Matrix::Zero(2, 3), Matrix::Zero(2, 1), Matrix::Zero(2, 1)),
               ShapeError);
  EXPECT_THROW(bilinear_inner(Matrix::Zero(2, 3), Matrix::Zero(2, 2), Matrix::Zero(3, 1)),
               ShapeError);
}
