#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "simlens/embedder/backend.hpp"
#include "simlens/matrix.hpp"

namespace simlens {

enum class SimilarityKind { cosine, attention_product };
enum class Pooling { mean_pool_cosine, greedy_match };

inline std::string_view to_string(SimilarityKind k) noexcept {
  return k == SimilarityKind::cosine ? "cosine" : "attention_product";
}
inline std::string_view to_string(Pooling p) noexcept {
  return p == Pooling::mean_pool_cosine ? "mean_pool_cosine" : "greedy_match";
}

struct SimilarityMatrix {
  SimilarityKind kind = SimilarityKind::cosine;
  Matrix values;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
};

struct FragmentSimilarity {
  double value = 0.0;
  Pooling pooling = Pooling::greedy_match;
};

// Symmetric fragment-by-fragment score table with unit diagonal.
struct FragmentMatrix {
  std::vector<std::string> ids;
  Matrix values;
  Pooling pooling = Pooling::greedy_match;
};

namespace detail {

inline void require_same_dim(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("embedding widths differ: " + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
  }
}

inline std::vector<double> row_norms(const EmbeddingMatrix& e) {
  std::vector<double> out(e.rows());
  for (std::size_t i = 0; i < e.rows(); ++i) {
    out[i] = norm(e.values.row(i));
    if (!(out[i] > 0.0) || !std::isfinite(out[i])) {
      throw ZeroNormEmbedding("fragment '" + e.fragment_id + "' row " + std::to_string(i) +
                              " has zero or non-finite norm");
    }
  }
  return out;
}

inline double clamp_unit(double v) noexcept { return std::clamp(v, -1.0, 1.0); }

inline std::vector<double> mean_row(const Matrix& m) {
  std::vector<double> u(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t c = 0; c < m.cols(); ++c) u[c] += m(i, c);
  for (double& x : u) x /= static_cast<double>(m.rows());
  return u;
}

}  // namespace detail

// S_ij = cos(row i of e1, row j of e2).
inline SimilarityMatrix cosine_matrix(const EmbeddingMatrix& e1, const EmbeddingMatrix& e2) {
  detail::require_same_dim(e1, e2);
  const auto n1 = detail::row_norms(e1);
  const auto n2 = detail::row_norms(e2);
  SimilarityMatrix s{SimilarityKind::cosine, Matrix(e1.rows(), e2.rows()), e1.labels, e2.labels};
  for (std::size_t i = 0; i < e1.rows(); ++i)
    for (std::size_t j = 0; j < e2.rows(); ++j)
      s.values(i, j) = detail::clamp_unit(dot(e1.values.row(i), e2.values.row(j)) / (n1[i] * n2[j]));
  return s;
}

// Head-averaged attention product (1/H) sum_h A1_h A2_h^T. Fragments of
// different length are reconciled by zero-padding both attention matrices'
// columns to max(n1, n2); rows are not padded, so the result is n1 x n2 and,
// for row-stochastic inputs, every entry is a dot product of two probability
// vectors and lies in [0, 1].
inline SimilarityMatrix attention_product(const AttentionTensor& a1, const AttentionTensor& a2) {
  if (a1.head_count() != a2.head_count()) {
    throw HeadMismatch("attention head counts differ: " + std::to_string(a1.head_count()) + " vs " +
                       std::to_string(a2.head_count()));
  }
  if (a1.head_count() == 0) throw HeadMismatch("attention tensors have no heads");
  const std::size_t n1 = a1.size();
  const std::size_t n2 = a2.size();
  const std::size_t shared = std::min(n1, n2);  // padded columns contribute zero
  SimilarityMatrix s{SimilarityKind::attention_product, Matrix(n1, n2), a1.labels, a2.labels};
  for (std::size_t h = 0; h < a1.head_count(); ++h) {
    const Matrix& x = a1.heads[h];
    const Matrix& y = a2.heads[h];
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n2; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < shared; ++k) acc += x(i, k) * y(j, k);
        s.values(i, j) += acc;
      }
  }
  const double inv = 1.0 / static_cast<double>(a1.head_count());
  for (double& v : s.values.data()) v = std::clamp(v * inv, 0.0, 1.0);
  return s;
}

// Fragment-level score.
//   mean_pool_cosine: cosine of the two mean token vectors.
//   greedy_match:     1/2 [ mean_i max_j cos(e_i, f_j) + mean_j max_i cos(e_i, f_j) ].
inline FragmentSimilarity fragment_similarity(const EmbeddingMatrix& e1, const EmbeddingMatrix& e2,
                                              Pooling pooling) {
  detail::require_same_dim(e1, e2);
  if (e1.rows() == 0 || e2.rows() == 0) {
    throw EmptyInput("fragment_similarity needs at least one code token per fragment");
  }
  if (pooling == Pooling::mean_pool_cosine) {
    detail::row_norms(e1);
    detail::row_norms(e2);
    const auto u = detail::mean_row(e1.values);
    const auto v = detail::mean_row(e2.values);
    const double nu = norm(u);
    const double nv = norm(v);
    if (!(nu > 0.0) || !(nv > 0.0)) throw ZeroNormEmbedding("mean-pooled vector has zero norm");
    return {detail::clamp_unit(dot(u, v) / (nu * nv)), pooling};
  }

  const auto s = cosine_matrix(e1, e2);
  double rows = 0.0;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto r = s.values.row(i);
    rows += *std::max_element(r.begin(), r.end());
  }
  double cols = 0.0;
  for (std::size_t j = 0; j < s.cols(); ++j) {
    double best = s.values(0, j);
    for (std::size_t i = 1; i < s.rows(); ++i) best = std::max(best, s.values(i, j));
    cols += best;
  }
  const double value = 0.5 * (rows / static_cast<double>(s.rows()) + cols / static_cast<double>(s.cols()));
  return {detail::clamp_unit(value), pooling};
}

// Pairwise scores over already encoded fragments (delimiter tokens are
// removed here).
inline FragmentMatrix fragment_matrix(const std::vector<EncodedFragment>& encoded, Pooling pooling) {
  if (encoded.size() < 2) throw InvalidArgument("fragment_matrix needs at least two fragments");
  std::vector<EmbeddingMatrix> code;
  code.reserve(encoded.size());
  FragmentMatrix out{{}, Matrix(encoded.size(), encoded.size()), pooling};
  for (const auto& f : encoded) {
    if (std::find(out.ids.begin(), out.ids.end(), f.fragment.id) != out.ids.end()) {
      throw InvalidArgument("duplicate fragment id '" + f.fragment.id + "'");
    }
    code.push_back(strip_special(f.embeddings, f.tokens));
    out.ids.push_back(f.fragment.id);
  }
  for (std::size_t i = 0; i < code.size(); ++i) {
    out.values(i, i) = fragment_similarity(code[i], code[i], pooling).value;
    for (std::size_t j = i + 1; j < code.size(); ++j) {
      const double v = fragment_similarity(code[i], code[j], pooling).value;
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

inline FragmentMatrix fragment_matrix(const std::vector<CodeFragment>& corpus, const Backend& backend,
                                      Pooling pooling) {
  if (corpus.size() < 2) throw InvalidArgument("fragment_matrix needs at least two fragments");
  std::vector<EncodedFragment> encoded;
  encoded.reserve(corpus.size());
  for (const auto& f : corpus) encoded.push_back(backend.encode(f));
  return fragment_matrix(encoded, pooling);
}

inline FragmentMatrix fragment_matrix(const std::vector<CodeFragment>& corpus,
                                      const BackendConfig& config, Pooling pooling) {
  return fragment_matrix(corpus, *make_backend(config), pooling);
}

}  // namespace simlens
