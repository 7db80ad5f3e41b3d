#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "simlens/dimred/pca.hpp"
#include "support.hpp"

using namespace simlens;

namespace {

// Coordinates from a full Eigen SVD under the library's sign convention.
Eigen::MatrixXd oracle_coordinates(const Matrix& x, int p) {
  Eigen::MatrixXd m(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) m(i, j) = x(i, j);
  m.rowwise() -= m.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  Eigen::MatrixXd v = svd.matrixV().leftCols(p);
  for (int k = 0; k < p; ++k) {
    Eigen::Index lead = 0;
    v.col(k).cwiseAbs().maxCoeff(&lead);
    if (v(lead, k) < 0) v.col(k) *= -1.0;
  }
  return m * v;
}

void expect_matches_oracle(const Matrix& x, std::size_t p) {
  const PcaModel model = pca(x, p);
  const Eigen::MatrixXd ref = oracle_coordinates(x, static_cast<int>(p));
  ASSERT_FALSE(model.degenerate);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t k = 0; k < p; ++k)
      EXPECT_NEAR(model.coordinates(i, k), ref(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)), 1e-8);
}

}  // namespace

TEST(Pca, MatchesFullSvdOracle50x20) { expect_matches_oracle(support::gaussian_matrix(50, 20, 101), 2); }

TEST(Pca, MatchesFullSvdOracleWide) { expect_matches_oracle(support::gaussian_matrix(10, 6, 102), 4); }

TEST(Pca, CollinearAnalytic) {
  const auto proj = pca_project(unlabeled(Matrix{{0, 0}, {1, 1}, {2, 2}}));
  EXPECT_NEAR(proj.points(0, 0), -std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(proj.points(1, 0), 0.0, 1e-9);
  EXPECT_NEAR(proj.points(2, 0), std::sqrt(2.0), 1e-9);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(proj.points(i, 1), 0.0, 1e-9);
  EXPECT_EQ(proj.method, ProjectionMethod::pca);
}

TEST(Pca, CentredOrthonormalAndOrdered) {
  const Matrix x = support::gaussian_matrix(30, 8, 103);
  const PcaModel m = pca(x, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 30; ++i) mean += m.coordinates(i, k);
    EXPECT_NEAR(mean, 0.0, 1e-10);
    for (std::size_t l = 0; l < 3; ++l) EXPECT_NEAR(dot(m.components.row(k), m.components.row(l)), k == l, 1e-12);
  }
  EXPECT_GE(m.explained_variance[0], m.explained_variance[1]);
  EXPECT_GE(m.explained_variance[1], m.explained_variance[2]);
}

TEST(Pca, DegenerateInputIsFlaggedNotThrown) {
  const auto proj = pca_project(unlabeled(Matrix(5, 3, 2.5)));
  EXPECT_TRUE(proj.degenerate);
  for (double v : proj.points.data()) EXPECT_EQ(v, 0.0);
}

TEST(Pca, DeterministicAndErrors) {
  const Matrix x = support::gaussian_matrix(12, 5, 104);
  EXPECT_EQ(pca(x, 2).coordinates, pca(x, 2).coordinates);
  EXPECT_THROW(pca(Matrix(1, 3), 2), TooFewPoints);
  EXPECT_THROW(pca(Matrix(4, 1), 2), InvalidArgument);
}
