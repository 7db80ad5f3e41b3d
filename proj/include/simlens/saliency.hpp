#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "simlens/simcore.hpp"

namespace simlens {

struct SaliencyVector {
  std::string fragment_id;
  std::string paired_fragment_id;
  Pooling pooling = Pooling::greedy_match;
  std::vector<double> scores;  // one per code token, >= 0
};

struct SaliencyPair {
  SaliencyVector first;
  SaliencyVector second;
};

// Gradient of fragment_similarity(e1, e2, pooling) with respect to every
// row of e1 and of e2, in closed form.
struct SimilarityGradient {
  Matrix wrt_first;   // n1 x d
  Matrix wrt_second;  // n2 x d
};

namespace detail {

// d cos(x, y) / dx = y / (|x||y|) - cos(x, y) x / |x|^2, accumulated as
// out += scale * d cos / dx.
inline void add_cosine_gradient(std::span<double> out, std::span<const double> x,
                                std::span<const double> y, double nx, double ny, double cosine,
                                double scale) {
  const double a = scale / (nx * ny);
  const double b = scale * cosine / (nx * nx);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] += a * y[c] - b * x[c];
}

inline SimilarityGradient mean_pool_gradient(const EmbeddingMatrix& e1, const EmbeddingMatrix& e2) {
  row_norms(e1);
  row_norms(e2);
  const auto u = mean_row(e1.values);
  const auto v = mean_row(e2.values);
  const double nu = norm(u), nv = norm(v);
  if (!(nu > 0.0) || !(nv > 0.0)) throw ZeroNormEmbedding("mean-pooled vector has zero norm");
  const double cosine = dot(u, v) / (nu * nv);
  // Every token of a fragment receives the same gradient, (1/n) d cos(u, v) / du.
  std::vector<double> gu(u.size(), 0.0), gv(v.size(), 0.0);
  add_cosine_gradient(gu, u, v, nu, nv, cosine, 1.0 / static_cast<double>(e1.rows()));
  add_cosine_gradient(gv, v, u, nv, nu, cosine, 1.0 / static_cast<double>(e2.rows()));
  SimilarityGradient g{Matrix(e1.rows(), e1.dim()), Matrix(e2.rows(), e2.dim())};
  for (std::size_t i = 0; i < e1.rows(); ++i) std::copy(gu.begin(), gu.end(), g.wrt_first.row(i).begin());
  for (std::size_t j = 0; j < e2.rows(); ++j) std::copy(gv.begin(), gv.end(), g.wrt_second.row(j).begin());
  return g;
}

// Subgradient of the greedy matching score. Each max picks its first
// (lowest-index) maximiser.
inline SimilarityGradient greedy_gradient(const EmbeddingMatrix& e1, const EmbeddingMatrix& e2) {
  const auto n1 = row_norms(e1);
  const auto n2 = row_norms(e2);
  const std::size_t r1 = e1.rows(), r2 = e2.rows();
  Matrix cos(r1, r2);
  for (std::size_t i = 0; i < r1; ++i)
    for (std::size_t j = 0; j < r2; ++j) cos(i, j) = dot(e1.values.row(i), e2.values.row(j)) / (n1[i] * n2[j]);

  SimilarityGradient g{Matrix(r1, e1.dim()), Matrix(r2, e2.dim())};
  const double row_scale = 0.5 / static_cast<double>(r1);
  const double col_scale = 0.5 / static_cast<double>(r2);
  auto term = [&](std::size_t i, std::size_t j, double scale) {
    add_cosine_gradient(g.wrt_first.row(i), e1.values.row(i), e2.values.row(j), n1[i], n2[j], cos(i, j), scale);
    add_cosine_gradient(g.wrt_second.row(j), e2.values.row(j), e1.values.row(i), n2[j], n1[i], cos(i, j), scale);
  };
  for (std::size_t i = 0; i < r1; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < r2; ++j)
      if (cos(i, j) > cos(i, best)) best = j;
    term(i, best, row_scale);
  }
  for (std::size_t j = 0; j < r2; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < r1; ++i)
      if (cos(i, j) > cos(best, j)) best = i;
    term(best, j, col_scale);
  }
  return g;
}

inline std::vector<double> row_norms_of(const Matrix& m, const std::string& who) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out[i] = norm(m.row(i));
    if (!std::isfinite(out[i])) throw NaNGradient("non-finite saliency gradient for '" + who + "'");
  }
  return out;
}

}  // namespace detail

inline SimilarityGradient similarity_gradient(const EmbeddingMatrix& e1, const EmbeddingMatrix& e2,
                                              Pooling pooling) {
  detail::require_same_dim(e1, e2);
  if (e1.rows() == 0 || e2.rows() == 0) {
    throw EmptyInput("saliency needs at least one code token per fragment");
  }
  return pooling == Pooling::mean_pool_cosine ? detail::mean_pool_gradient(e1, e2)
                                              : detail::greedy_gradient(e1, e2);
}

// Per-token saliency |d sim / d e_i| for both fragments. Inputs are code
// tokens only (strip delimiter rows first).
inline SaliencyPair saliency_map(const EmbeddingMatrix& e1, const EmbeddingMatrix& e2,
                                 Pooling pooling = Pooling::greedy_match) {
  const SimilarityGradient g = similarity_gradient(e1, e2, pooling);
  SaliencyPair out;
  out.first = {e1.fragment_id, e2.fragment_id, pooling, detail::row_norms_of(g.wrt_first, e1.fragment_id)};
  out.second = {e2.fragment_id, e1.fragment_id, pooling, detail::row_norms_of(g.wrt_second, e2.fragment_id)};
  return out;
}

}  // namespace simlens
