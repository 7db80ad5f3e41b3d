#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "simlens/embedder/backend.hpp"
#include "simlens/report/fixtures.hpp"
#include "simlens/saliency.hpp"
#include "support.hpp"

using namespace simlens;
using simlens::support::embedding;
using simlens::support::gaussian_matrix;

namespace {

EmbeddingMatrix fixture_embeddings(const char* name) {
  BackendConfig cfg;
  cfg.seed = 7;
  return strip_special(make_backend(cfg)->encode(*fixtures::find(name))).embeddings;
}

// Repeated surfaces share one stub vector and tie exactly in every max;
// keep the first occurrence of each.
EmbeddingMatrix distinct_tokens(const EmbeddingMatrix& e) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < e.rows(); ++i)
    if (std::find(e.labels.begin(), e.labels.begin() + static_cast<std::ptrdiff_t>(i), e.labels[i]) ==
        e.labels.begin() + static_cast<std::ptrdiff_t>(i))
      keep.push_back(i);
  Matrix m(keep.size(), e.dim());
  EmbeddingMatrix out{e.fragment_id, {}, {}};
  for (std::size_t r = 0; r < keep.size(); ++r) {
    std::copy(e.values.row(keep[r]).begin(), e.values.row(keep[r]).end(), m.row(r).begin());
    out.labels.push_back(e.labels[keep[r]]);
  }
  out.values = std::move(m);
  return out;
}

// Smallest gap between the best and second-best cosine over every row and
// column max; finite differences are only meaningful away from ties.
double max_gap(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  const Matrix s = cosine_matrix(a, b).values;
  double gap = INFINITY;
  auto scan = [&](auto get, std::size_t outer, std::size_t inner) {
    for (std::size_t o = 0; o < outer; ++o) {
      double best = -2, second = -2;
      for (std::size_t k = 0; k < inner; ++k) {
        const double v = get(o, k);
        if (v > best) {
          second = best;
          best = v;
        } else if (v > second) {
          second = v;
        }
      }
      gap = std::min(gap, best - second);
    }
  };
  scan([&](std::size_t i, std::size_t j) { return s(i, j); }, s.rows(), s.cols());
  scan([&](std::size_t j, std::size_t i) { return s(i, j); }, s.cols(), s.rows());
  return gap;
}

// Central differences of fragment_similarity with respect to every entry.
void expect_gradient_matches(EmbeddingMatrix a, EmbeddingMatrix b, Pooling pooling, double rel_tol) {
  const SimilarityGradient g = similarity_gradient(a, b, pooling);
  constexpr double h = 1e-5;
  double err = 0.0, scale = 0.0;
  for (auto* side : {&a, &b}) {
    const Matrix& grad = side == &a ? g.wrt_first : g.wrt_second;
    for (std::size_t k = 0; k < side->values.data().size(); ++k) {
      double& x = side->values.data()[k];
      const double keep = x;
      x = keep + h;
      const double up = fragment_similarity(a, b, pooling).value;
      x = keep - h;
      const double down = fragment_similarity(a, b, pooling).value;
      x = keep;
      const double fd = (up - down) / (2.0 * h);
      err += (fd - grad.data()[k]) * (fd - grad.data()[k]);
      scale += fd * fd;
    }
  }
  ASSERT_GT(scale, 0.0);
  EXPECT_LT(std::sqrt(err / scale), rel_tol);
}

}  // namespace

TEST(SaliencyGradient, GreedyMatchesFiniteDifferencesOnFixtures) {
  const auto a = distinct_tokens(fixture_embeddings("bubble"));
  const auto b = distinct_tokens(fixture_embeddings("quick"));
  // Perturbations of 1e-5 cannot change any argmax when every gap is wider.
  ASSERT_GT(max_gap(a, b), 1e-3);
  expect_gradient_matches(a, b, Pooling::greedy_match, 1e-5);
}

TEST(SaliencyGradient, GreedyMatchesFiniteDifferencesRandom) {
  const auto a = embedding("a", gaussian_matrix(6, 5, 401));
  const auto b = embedding("b", gaussian_matrix(4, 5, 402));
  ASSERT_GT(max_gap(a, b), 1e-3);
  expect_gradient_matches(a, b, Pooling::greedy_match, 1e-5);
}

TEST(SaliencyGradient, MeanPoolMatchesFiniteDifferences) {
  expect_gradient_matches(embedding("a", gaussian_matrix(5, 7, 403)), embedding("b", gaussian_matrix(8, 7, 404)),
                          Pooling::mean_pool_cosine, 1e-5);
}

TEST(Saliency, MeanPoolIsUniformAcrossTokens) {
  const auto s = saliency_map(fixture_embeddings("bubble"), fixture_embeddings("merge"), Pooling::mean_pool_cosine);
  for (const auto* v : {&s.first, &s.second})
    for (double x : v->scores) EXPECT_NEAR(x, v->scores.front(), 1e-9);
  EXPECT_GT(s.first.scores.front(), 0.0);
}

TEST(Saliency, MeanPoolSelfComparisonIsZero) {
  const auto a = fixture_embeddings("insertion");
  const auto s = saliency_map(a, a, Pooling::mean_pool_cosine);
  for (double x : s.first.scores) EXPECT_NEAR(x, 0.0, 1e-9);
  for (double x : s.second.scores) EXPECT_NEAR(x, 0.0, 1e-9);
}

TEST(Saliency, ShapeLabelsAndSign) {
  const auto a = fixture_embeddings("bubble");
  const auto b = fixture_embeddings("selection");
  const auto s = saliency_map(a, b);
  EXPECT_EQ(s.first.scores.size(), a.rows());
  EXPECT_EQ(s.second.scores.size(), b.rows());
  EXPECT_EQ(s.first.fragment_id, "bubble_sort");
  EXPECT_EQ(s.first.paired_fragment_id, "selection_sort");
  EXPECT_EQ(s.first.pooling, Pooling::greedy_match);
  for (double x : s.first.scores) EXPECT_GE(x, 0.0);
}

TEST(Saliency, SwappingArgumentsSwapsVectors) {
  const auto a = embedding("a", gaussian_matrix(5, 6, 405));
  const auto b = embedding("b", gaussian_matrix(7, 6, 406));
  const auto ab = saliency_map(a, b);
  const auto ba = saliency_map(b, a);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(ab.first.scores[i], ba.second.scores[i], 1e-14);
  for (std::size_t j = 0; j < 7; ++j) EXPECT_NEAR(ab.second.scores[j], ba.first.scores[j], 1e-14);
}

TEST(Saliency, ScalesInverselyWithEmbeddingNorm) {
  const auto a = embedding("a", gaussian_matrix(5, 6, 407));
  const auto b = embedding("b", gaussian_matrix(4, 6, 408));
  auto a3 = a;
  for (double& v : a3.values.data()) v *= 3.0;
  const auto base = saliency_map(a, b);
  const auto scaled = saliency_map(a3, b);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(scaled.first.scores[i], base.first.scores[i] / 3.0, 1e-12);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(scaled.second.scores[j], base.second.scores[j], 1e-12);
}

TEST(Saliency, Errors) {
  EXPECT_THROW(saliency_map(embedding("a", Matrix(0, 3)), embedding("b", {{1, 0, 0}})), EmptyInput);
  EXPECT_THROW(saliency_map(embedding("a", {{1, 0}}), embedding("b", {{1, 0, 0}})), DimensionMismatch);
  EXPECT_THROW(saliency_map(embedding("a", {{0, 0}}), embedding("b", {{1, 0}})), ZeroNormEmbedding);
}
