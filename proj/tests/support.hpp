#pragma once

#include <string>
#include <vector>

#include "simlens/embedder/types.hpp"
#include "simlens/matrix.hpp"
#include "simlens/rng.hpp"

namespace simlens::support {

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

inline EmbeddingMatrix embedding(std::string id, Matrix values) {
  EmbeddingMatrix e;
  e.fragment_id = std::move(id);
  for (std::size_t i = 0; i < values.rows(); ++i) e.labels.push_back("t" + std::to_string(i));
  e.values = std::move(values);
  return e;
}

inline AttentionTensor attention(std::vector<Matrix> heads) {
  AttentionTensor a;
  a.heads = std::move(heads);
  return a;
}

// Two isotropic clusters of `per_cluster` points each, centred at 0 and at
// `offset` along the first axis.
inline Matrix two_clusters(std::size_t per_cluster, std::size_t dim, double offset, std::uint64_t seed) {
  Matrix m = gaussian_matrix(2 * per_cluster, dim, seed);
  for (std::size_t i = per_cluster; i < 2 * per_cluster; ++i) m(i, 0) += offset;
  return m;
}

}  // namespace simlens::support
