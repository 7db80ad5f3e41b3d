#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "simlens/dimred/pca.hpp"
#include "simlens/rng.hpp"

namespace simlens {

struct UmapConfig {
  std::size_t n_neighbors = 15;  // counts the point itself
  double min_dist = 0.1;
  double spread = 1.0;
  std::size_t epochs = 200;
  std::size_t negative_samples = 5;
  double learning_rate = 1.0;
};

struct UmapNeighbor {
  std::size_t index = 0;
  double distance = 0.0;
  double weight = 0.0;  // directed membership exp(-(d - rho) / sigma)
};

struct UmapEdge {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  double weight = 0.0;  // symmetrised a + b - ab
};

struct UmapGraph {
  std::size_t n = 0;
  std::size_t k = 0;  // effective n_neighbors
  std::vector<double> rho;
  std::vector<double> sigma;
  std::vector<std::vector<UmapNeighbor>> knn;  // k - 1 nearest other points, ascending
  std::vector<UmapEdge> edges;

  Matrix weight_matrix() const {
    Matrix w(n, n);
    for (const auto& e : edges) {
      w(e.i, e.j) = e.weight;
      w(e.j, e.i) = e.weight;
    }
    return w;
  }
};

inline constexpr double kUmapDistanceFloor = 1e-12;

// Sum of directed memberships of one point for bandwidth sigma.
inline double umap_membership_sum(const std::vector<UmapNeighbor>& nbrs, double rho, double sigma) {
  double s = 0.0;
  for (const auto& nb : nbrs) {
    s += std::exp(-std::max(0.0, nb.distance - rho) / std::max(sigma, kUmapDistanceFloor));
  }
  return s;
}

// Fuzzy neighbour graph. n_neighbors counts the point itself, so every point
// has k - 1 neighbours and sigma_i solves
//   sum_j exp(-(d_ij - rho_i) / sigma_i) = log2(k),
// which is attainable for every k >= 2. Ties in distance go to the lower index.
inline UmapGraph umap_graph(const Matrix& x, const UmapConfig& cfg) {
  const std::size_t n = x.rows();
  if (n < 3) throw TooFewPoints("UMAP needs at least three points");
  const std::size_t k = std::min(cfg.n_neighbors, n - 1);
  if (k < 2) throw InvalidArgument("UMAP needs n_neighbors >= 2");

  UmapGraph g;
  g.n = n;
  g.k = k;
  g.rho.assign(n, 0.0);
  g.sigma.assign(n, 1.0);
  g.knn.resize(n);
  const double target = std::log2(static_cast<double>(k));

  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back(std::sqrt(squared_distance(x.row(i), x.row(j))), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k - 1), cand.end());
    auto& nbrs = g.knn[i];
    for (std::size_t m = 0; m + 1 < k; ++m) nbrs.push_back({cand[m].second, cand[m].first, 0.0});
    const double rho = nbrs.front().distance;
    g.rho[i] = rho;

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double sigma = 1.0;
    for (int iter = 0; iter < 200; ++iter) {
      const double s = umap_membership_sum(nbrs, rho, sigma);
      if (std::abs(s - target) < 1e-12) break;
      if (s > target) {
        hi = sigma;
        sigma = 0.5 * (lo + hi);
      } else {
        lo = sigma;
        sigma = std::isinf(hi) ? sigma * 2.0 : 0.5 * (lo + hi);
      }
    }
    g.sigma[i] = sigma;
    for (auto& nb : nbrs) {
      nb.weight = std::exp(-std::max(0.0, nb.distance - rho) / std::max(sigma, kUmapDistanceFloor));
    }
  }

  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> directed;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& nb : g.knn[i]) {
      const auto key = std::minmax(i, nb.index);
      auto& slot = directed[{key.first, key.second}];
      (i < nb.index ? slot.first : slot.second) = nb.weight;
    }
  }
  for (const auto& [key, ab] : directed) {
    const double w = ab.first + ab.second - ab.first * ab.second;
    if (w > 0.0) g.edges.push_back({key.first, key.second, w});
  }
  return g;
}

struct UmapCurve {
  double a = 1.0;
  double b = 1.0;
};

// Least-squares fit of 1 / (1 + a x^(2b)) to the piecewise target
// 1 for x < min_dist, exp(-(x - min_dist) / spread) otherwise, sampled at
// 300 points on [0, 3 spread]. Levenberg-Marquardt from (1, 1).
inline UmapCurve fit_curve(double min_dist, double spread = 1.0) {
  constexpr int samples = 300;
  std::vector<double> xs(samples), ys(samples);
  for (int s = 0; s < samples; ++s) {
    xs[s] = 3.0 * spread * static_cast<double>(s) / (samples - 1);
    ys[s] = xs[s] < min_dist ? 1.0 : std::exp(-(xs[s] - min_dist) / spread);
  }
  auto residual_sq = [&](double a, double b) {
    double r = 0.0;
    for (int s = 0; s < samples; ++s) {
      const double f = 1.0 / (1.0 + a * std::pow(xs[s], 2.0 * b));
      r += (f - ys[s]) * (f - ys[s]);
    }
    return r;
  };

  double a = 1.0, b = 1.0, lambda = 1e-3;
  double cost = residual_sq(a, b);
  for (int iter = 0; iter < 500; ++iter) {
    double jaa = 0.0, jab = 0.0, jbb = 0.0, ga = 0.0, gb = 0.0;
    for (int s = 0; s < samples; ++s) {
      const double x = xs[s];
      if (x <= 0.0) continue;  // f = 1 and both partials vanish at the origin
      const double p = std::pow(x, 2.0 * b);
      const double den = 1.0 + a * p;
      const double f = 1.0 / den;
      const double r = f - ys[s];
      const double da = -p / (den * den);
      const double db = -a * p * 2.0 * std::log(x) / (den * den);
      jaa += da * da;
      jab += da * db;
      jbb += db * db;
      ga += da * r;
      gb += db * r;
    }
    const double haa = jaa * (1.0 + lambda), hbb = jbb * (1.0 + lambda);
    const double det = haa * hbb - jab * jab;
    if (det == 0.0) break;
    const double step_a = -(hbb * ga - jab * gb) / det;
    const double step_b = -(haa * gb - jab * ga) / det;
    const double na = a + step_a, nb = b + step_b;
    const double ncost = (na > 0.0 && nb > 0.0) ? residual_sq(na, nb) : std::numeric_limits<double>::infinity();
    if (ncost < cost) {
      const bool done = cost - ncost < 1e-16 * std::max(1.0, cost);
      a = na;
      b = nb;
      cost = ncost;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (done) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return {a, b};
}

// Low-dimensional membership nu(d) = 1 / (1 + a d^(2b)).
inline double umap_nu(double dist_sq, const UmapCurve& c) {
  return 1.0 / (1.0 + c.a * std::pow(std::max(dist_sq, 0.0), c.b));
}

// Stochastic gradient descent on the fuzzy cross-entropy, sampling each
// directed edge in proportion to its weight with `negative_samples`
// repulsive samples per positive one. Initialised from the PCA layout scaled
// to a maximum coordinate of 10. The trace holds the mean sampled loss of
// every epoch (-log nu for positives, -log(1 - nu) for negatives).
inline Projection2D umap_optimize(const UmapGraph& g, const PointSet& points, const UmapConfig& cfg,
                                  std::uint64_t seed) {
  if (g.n != points.size()) throw DimensionMismatch("umap_optimize: graph and point counts differ");
  if (cfg.epochs == 0) throw InvalidArgument("UMAP needs at least one epoch");
  const std::size_t n = g.n;
  const UmapCurve curve = fit_curve(cfg.min_dist, cfg.spread);
  Rng rng(mix_seed(seed, 0x554D4150ULL));

  Matrix y(n, 2);
  const PcaModel init = pca(points.values, std::min<std::size_t>(2, points.values.cols()));
  double extent = 0.0;
  for (double v : init.coordinates.data()) extent = std::max(extent, std::abs(v));
  if (!init.degenerate && init.coordinates.cols() == 2 && extent > 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < 2; ++c) y(i, c) = init.coordinates(i, c) * (10.0 / extent);
  } else {
    for (double& v : y.data()) v = rng.uniform() * 20.0 - 10.0;
  }

  struct Directed {
    std::size_t head, tail;
    double epochs_per_sample;
  };
  std::vector<Directed> work;
  double wmax = 0.0;
  for (const auto& e : g.edges) wmax = std::max(wmax, e.weight);
  for (const auto& e : g.edges) {
    const double eps = wmax / e.weight;
    work.push_back({e.i, e.j, eps});
    work.push_back({e.j, e.i, eps});
  }
  std::vector<double> next_sample(work.size()), next_negative(work.size()), eps_negative(work.size());
  for (std::size_t s = 0; s < work.size(); ++s) {
    next_sample[s] = work[s].epochs_per_sample;
    eps_negative[s] = work[s].epochs_per_sample / static_cast<double>(cfg.negative_samples);
    next_negative[s] = eps_negative[s];
  }

  auto clip = [](double v) { return std::clamp(v, -4.0, 4.0); };
  constexpr double loss_floor = 1e-12;

  Projection2D out;
  out.method = ProjectionMethod::umap;
  out.seed = seed;
  out.labels = points.labels;
  out.trace.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double alpha = cfg.learning_rate * (1.0 - static_cast<double>(epoch) / static_cast<double>(cfg.epochs));
    const double now = static_cast<double>(epoch + 1);  // max-weight edges fire every epoch
    double loss = 0.0;
    std::size_t terms = 0;
    for (std::size_t s = 0; s < work.size(); ++s) {
      if (next_sample[s] > now) continue;
      const std::size_t j = work[s].head;
      const std::size_t k = work[s].tail;
      double d2 = squared_distance(y.row(j), y.row(k));
      loss += -std::log(std::max(umap_nu(d2, curve), loss_floor));
      ++terms;
      if (d2 > 0.0) {
        const double coeff = -2.0 * curve.a * curve.b * std::pow(d2, curve.b - 1.0) /
                             (curve.a * std::pow(d2, curve.b) + 1.0);
        for (std::size_t c = 0; c < 2; ++c) {
          const double grad = clip(coeff * (y(j, c) - y(k, c)));
          y(j, c) += grad * alpha;
          y(k, c) -= grad * alpha;
        }
      }
      next_sample[s] += work[s].epochs_per_sample;

      const auto negatives = static_cast<std::size_t>((now - next_negative[s]) / eps_negative[s]);
      for (std::size_t p = 0; p < negatives; ++p) {
        const auto other = static_cast<std::size_t>(rng.below(n));
        if (other == j) continue;
        d2 = squared_distance(y.row(j), y.row(other));
        loss += -std::log(std::max(1.0 - umap_nu(d2, curve), loss_floor));
        ++terms;
        if (d2 > 0.0) {
          const double coeff = 2.0 * curve.b / ((0.001 + d2) * (curve.a * std::pow(d2, curve.b) + 1.0));
          for (std::size_t c = 0; c < 2; ++c) y(j, c) += clip(coeff * (y(j, c) - y(other, c))) * alpha;
        }
      }
      next_negative[s] += static_cast<double>(negatives) * eps_negative[s];
    }
    out.trace.push_back(terms == 0 ? 0.0 : loss / static_cast<double>(terms));
  }
  out.points = std::move(y);
  return out;
}

inline Projection2D umap_project(const PointSet& points, const UmapConfig& cfg, std::uint64_t seed) {
  return umap_optimize(umap_graph(points.values, cfg), points, cfg, seed);
}

}  // namespace simlens
