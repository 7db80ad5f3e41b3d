#include <cmath>

#include <gtest/gtest.h>

#include "simlens/linalg.hpp"
#include "simlens/rng.hpp"
#include "support.hpp"

using namespace simlens;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
}

TEST(Rng, SplitMixReferenceValue) {
  // First output of SplitMix64 seeded with 0.
  EXPECT_EQ(Rng(0).next(), 0xE220A8397B1DCDAFULL);
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(1);
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  constexpr int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 5e-3);
  EXPECT_NEAR(sn / n, 0.0, 1e-2);
  EXPECT_NEAR(sn2 / n, 1.0, 2e-2);
}

TEST(Rng, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xCBF29CE484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xAF63DC4C8601EC8CULL);
}

TEST(MatrixOps, InitializerAndTranspose) {
  const Matrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  const Matrix t = m.transposed();
  EXPECT_EQ(t(2, 1), 6.0);
  EXPECT_EQ(t.transposed(), m);
  EXPECT_THROW((Matrix{{1, 2}, {3}}), InvalidArgument);
}

TEST(MatrixOps, MultiplyTransposedAndVstack) {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{1, 0}, {0, 1}, {1, 1}};
  const Matrix p = multiply_transposed(a, b);
  EXPECT_EQ(p, (Matrix{{1, 2, 3}, {3, 4, 7}}));
  EXPECT_THROW(multiply_transposed(a, Matrix(2, 3)), DimensionMismatch);

  const Matrix* parts[] = {&a, &b};
  const Matrix s = vstack(parts);
  EXPECT_EQ(s.rows(), 5u);
  EXPECT_EQ(s(4, 1), 1.0);
}

namespace {

void expect_reconstructs(const Matrix& x, double tol) {
  const Svd d = svd(x);
  const std::size_t r = std::min(x.rows(), x.cols());
  ASSERT_EQ(d.s.size(), r);
  for (std::size_t k = 1; k < r; ++k) EXPECT_GE(d.s[k - 1], d.s[k]);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < r; ++k) v += d.u(i, k) * d.s[k] * d.v(j, k);
      EXPECT_NEAR(v, x(i, j), tol);
    }
  for (const Matrix* q : {&d.u, &d.v})
    for (std::size_t a = 0; a < r; ++a)
      for (std::size_t b = 0; b < r; ++b) {
        double g = 0.0;
        for (std::size_t i = 0; i < q->rows(); ++i) g += (*q)(i, a) * (*q)(i, b);
        EXPECT_NEAR(g, a == b ? 1.0 : 0.0, 1e-10);
      }
}

}  // namespace

TEST(Svd, ReconstructsTallAndWide) {
  expect_reconstructs(support::gaussian_matrix(12, 5, 3), 1e-10);
  expect_reconstructs(support::gaussian_matrix(4, 9, 4), 1e-10);
}

TEST(Svd, RankDeficientKeepsOrthonormalBasis) {
  Matrix x(6, 4);
  for (std::size_t i = 0; i < 6; ++i) {
    x(i, 0) = static_cast<double>(i);
    x(i, 1) = 2.0 * static_cast<double>(i);
  }
  expect_reconstructs(x, 1e-10);
  const Svd d = svd(x);
  EXPECT_NEAR(d.s[1], 0.0, 1e-12);
}

TEST(Svd, DiagonalInput) {
  const Svd d = svd(Matrix{{3, 0}, {0, -5}});
  EXPECT_NEAR(d.s[0], 5.0, 1e-14);
  EXPECT_NEAR(d.s[1], 3.0, 1e-14);
}
