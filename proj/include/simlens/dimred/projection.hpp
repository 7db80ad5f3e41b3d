#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simlens/embedder/types.hpp"
#include "simlens/matrix.hpp"

namespace simlens {

enum class ProjectionMethod { pca, tsne, umap };

inline std::string_view to_string(ProjectionMethod m) noexcept {
  switch (m) {
    case ProjectionMethod::pca: return "pca";
    case ProjectionMethod::tsne: return "tsne";
    case ProjectionMethod::umap: return "umap";
  }
  return "pca";
}

struct PointLabel {
  std::string fragment_id;
  std::string surface;
  friend bool operator==(const PointLabel&, const PointLabel&) = default;
};

// Rows to project together with the provenance of every row.
struct PointSet {
  Matrix values;
  std::vector<PointLabel> labels;

  std::size_t size() const noexcept { return values.rows(); }
};

struct Projection2D {
  Matrix points;  // n x 2
  ProjectionMethod method = ProjectionMethod::pca;
  std::uint64_t seed = 0;
  std::vector<PointLabel> labels;
  // PCA only: every input point was identical and the layout is all zeros.
  bool degenerate = false;
  // Objective per iteration (t-SNE KL divergence, UMAP sampled loss).
  std::vector<double> trace;
};

// Stack several fragments' token rows into one point set, in order. The
// fragments are projected jointly so that they share one coordinate frame.
inline PointSet stack(std::span<const EmbeddingMatrix> parts) {
  PointSet out;
  std::vector<const Matrix*> mats;
  for (const auto& p : parts) {
    mats.push_back(&p.values);
    for (std::size_t i = 0; i < p.rows(); ++i) {
      out.labels.push_back({p.fragment_id, i < p.labels.size() ? p.labels[i] : std::string()});
    }
  }
  out.values = vstack(mats);
  return out;
}

inline PointSet unlabeled(const Matrix& values) {
  PointSet out{values, std::vector<PointLabel>(values.rows())};
  return out;
}

}  // namespace simlens
