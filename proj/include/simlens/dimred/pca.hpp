#pragma once

#include <cmath>
#include <vector>

#include "simlens/dimred/projection.hpp"
#include "simlens/linalg.hpp"

namespace simlens {

struct PcaModel {
  std::vector<double> mean;                // d
  Matrix components;                       // p x d, orthonormal rows
  std::vector<double> explained_variance;  // p, sigma_k^2 / (n - 1)
  Matrix coordinates;                      // n x p
  bool degenerate = false;
};

// Principal components from the SVD of the centred data. Each component is
// oriented so that its largest-magnitude loading is positive (first index
// wins ties), which fixes the sign ambiguity of the SVD.
inline PcaModel pca(const Matrix& data, std::size_t p) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  if (n < 2) throw TooFewPoints("pca needs at least two points");
  if (p == 0 || d < p) throw InvalidArgument("pca: need 1 <= p <= d");

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) model.mean[c] += data(i, c);
  for (double& m : model.mean) m /= static_cast<double>(n);

  Matrix centred(n, d);
  bool any_spread = false;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      centred(i, c) = data(i, c) - model.mean[c];
      any_spread = any_spread || data(i, c) != data(0, c);
    }

  model.components = Matrix(p, d);
  model.explained_variance.assign(p, 0.0);
  model.coordinates = Matrix(n, p);
  if (!any_spread) {
    model.degenerate = true;
    for (std::size_t k = 0; k < p; ++k) model.components(k, k) = 1.0;
    return model;
  }

  const Svd dec = svd(centred);
  for (std::size_t k = 0; k < p; ++k) {
    std::size_t lead = 0;
    for (std::size_t c = 1; c < d; ++c)
      if (std::abs(dec.v(c, k)) > std::abs(dec.v(lead, k))) lead = c;
    const double sign = dec.v(lead, k) < 0.0 ? -1.0 : 1.0;
    for (std::size_t c = 0; c < d; ++c) model.components(k, c) = sign * dec.v(c, k);
    model.explained_variance[k] = dec.s[k] * dec.s[k] / static_cast<double>(n - 1);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < p; ++k) model.coordinates(i, k) = dot(centred.row(i), model.components.row(k));
  return model;
}

inline Projection2D pca_project(const PointSet& points) {
  const PcaModel model = pca(points.values, 2);
  Projection2D out;
  out.points = model.coordinates;
  out.method = ProjectionMethod::pca;
  out.labels = points.labels;
  out.degenerate = model.degenerate;
  return out;
}

}  // namespace simlens
