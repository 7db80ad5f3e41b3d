#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "simlens/dimred/pca.hpp"
#include "simlens/rng.hpp"

namespace simlens {

struct TsneConfig {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch = 250;
  double init_scale = 1e-4;
};

// Gaussian conditional distribution P(.|i) of one point.
struct ConditionalRow {
  std::vector<double> p;  // p[i] == 0 for the point itself
  double beta = 1.0;      // precision 1 / (2 sigma^2)
  double entropy_bits = 0.0;

  double sigma() const { return std::sqrt(1.0 / (2.0 * beta)); }
};

inline Matrix squared_distances(const Matrix& x) {
  const std::size_t n = x.rows();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = squared_distance(x.row(i), x.row(j));
      d(i, j) = v;
      d(j, i) = v;
    }
  return d;
}

// Bisection on the precision beta so that the Shannon entropy (in bits) of
// p_j ∝ exp(-beta * d_j), j != self, equals log2(perplexity).
inline ConditionalRow calibrate_row(std::span<const double> sq_dists, std::size_t self,
                                    double perplexity) {
  const std::size_t n = sq_dists.size();
  const double target = std::log2(perplexity);
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j)
    if (j != self) dmin = std::min(dmin, sq_dists[j]);

  ConditionalRow row;
  row.p.assign(n, 0.0);
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double beta = 1.0;
  // Scale the starting point to the data so the search starts near the answer.
  double mean = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (j != self) mean += sq_dists[j];
  mean /= static_cast<double>(n - 1);
  if (mean > 0.0) beta = 1.0 / mean;

  auto evaluate = [&](double b) {
    double sum = 0.0, weighted = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == self) {
        row.p[j] = 0.0;
        continue;
      }
      const double shifted = sq_dists[j] - dmin;
      const double w = std::exp(-b * shifted);
      row.p[j] = w;
      sum += w;
      weighted += shifted * w;
    }
    for (double& v : row.p) v /= sum;
    // H = log(sum) + beta * E[d - dmin], in nats; shifting by dmin cancels.
    return (std::log(sum) + b * weighted / sum) / std::numbers::ln2;
  };

  double h = evaluate(beta);
  for (int iter = 0; iter < 200 && std::abs(h - target) > 1e-10; ++iter) {
    if (h > target) {
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
    } else {
      hi = beta;
      beta = 0.5 * (beta + lo);
    }
    h = evaluate(beta);
  }
  row.beta = beta;
  row.entropy_bits = h;
  return row;
}

struct TsneAffinities {
  Matrix p;                   // symmetric joint probabilities, sum 1
  std::vector<double> beta;   // per-point precision
  std::vector<double> entropy_bits;
};

// P_ij = (P_{j|i} + P_{i|j}) / (2n).
inline TsneAffinities joint_probabilities(const Matrix& x, double perplexity) {
  const std::size_t n = x.rows();
  const Matrix d = squared_distances(x);
  TsneAffinities out{Matrix(n, n), std::vector<double>(n), std::vector<double>(n)};
  Matrix cond(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = calibrate_row(d.row(i), i, perplexity);
    std::copy(row.p.begin(), row.p.end(), cond.row(i).begin());
    out.beta[i] = row.beta;
    out.entropy_bits[i] = row.entropy_bits;
  }
  const double denom = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.p(i, j) = (cond(i, j) + cond(j, i)) / denom;
  return out;
}

// KL(P || Q) with the Student-t low-dimensional kernel, and its gradient
//   dC/dy_i = 4 sum_j (p_ij - q_ij) (1 + |y_i - y_j|^2)^-1 (y_i - y_j).
// `exaggeration` scales P in the gradient only; kl is always against P.
struct KlEvaluation {
  double kl = 0.0;
  Matrix gradient;
};

inline KlEvaluation kl_and_gradient(const Matrix& p, const Matrix& y, double exaggeration = 1.0) {
  const std::size_t n = y.rows();
  const std::size_t dims = y.cols();
  Matrix w(n, n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 1.0 / (1.0 + squared_distance(y.row(i), y.row(j)));
      w(i, j) = v;
      w(j, i) = v;
      z += 2.0 * v;
    }
  KlEvaluation out{0.0, Matrix(n, dims)};
  constexpr double floor = 1e-12;
  // P, W and Q are symmetric: each unordered pair contributes twice to KL
  // and equal and opposite terms to the two gradients.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double q = w(i, j) / z;
      const double pij = p(i, j);
      if (pij > 0.0) out.kl += 2.0 * pij * std::log(pij / std::max(q, floor));
      const double coeff = 4.0 * (exaggeration * pij - q) * w(i, j);
      for (std::size_t c = 0; c < dims; ++c) {
        const double g = coeff * (y(i, c) - y(j, c));
        out.gradient(i, c) += g;
        out.gradient(j, c) -= g;
      }
    }
  }
  return out;
}

inline double effective_perplexity(double requested, std::size_t n) {
  return std::min(requested, static_cast<double>(n - 1) / 3.0);
}

// Exact all-pairs t-SNE: momentum gradient descent with per-coordinate
// gains, early exaggeration, and restarts once the objective is fixed, so
// the trace never rises after the exaggeration phase. The trace holds
// KL(P || Q) at the starting layout and after every iteration
// (iterations + 1 values).
inline Projection2D tsne_project(const PointSet& points, const TsneConfig& cfg, std::uint64_t seed) {
  const std::size_t n = points.size();
  if (n < 4) throw TooFewPoints("t-SNE needs at least four points");
  if (cfg.iterations < 250) throw InvalidArgument("t-SNE needs at least 250 iterations");
  const double perplexity = effective_perplexity(cfg.perplexity, n);
  if (perplexity < 2.0) {
    throw PerplexityTooLarge("t-SNE: perplexity clamped to " + std::to_string(perplexity) +
                             " for " + std::to_string(n) + " points; at least 2 is required (n >= 7)");
  }

  const TsneAffinities aff = joint_probabilities(points.values, perplexity);

  Matrix y(n, 2);
  const PcaModel init = pca(points.values, std::min<std::size_t>(2, points.values.cols()));
  if (!init.degenerate && init.coordinates.cols() == 2) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < 2; ++c) y(i, c) = init.coordinates(i, c) * cfg.init_scale;
  } else {
    Rng rng(mix_seed(seed, 0x54534E45ULL));
    for (double& v : y.data()) v = rng.normal() * cfg.init_scale;
  }

  Matrix update(n, 2);
  Matrix gains(n, 2, 1.0);
  Projection2D out;
  out.method = ProjectionMethod::tsne;
  out.seed = seed;
  out.labels = points.labels;
  out.trace.reserve(cfg.iterations + 1);

  auto exaggeration_at = [&](std::size_t it) {
    return it < cfg.exaggeration_iterations ? cfg.early_exaggeration : 1.0;
  };
  auto centre = [n](Matrix& m) {
    for (std::size_t c = 0; c < 2; ++c) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += m(i, c);
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) m(i, c) -= mean;
    }
  };

  KlEvaluation eval = kl_and_gradient(aff.p, y, exaggeration_at(0));
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const double momentum = it < cfg.momentum_switch ? cfg.initial_momentum : cfg.final_momentum;
    out.trace.push_back(eval.kl);  // KL against the unexaggerated P
    const Matrix previous = y;
    for (std::size_t k = 0; k < y.data().size(); ++k) {
      const double g = eval.gradient.data()[k];
      double& gain = gains.data()[k];
      double& step = update.data()[k];
      gain = (g > 0.0) != (step > 0.0) ? gain + 0.2 : gain * 0.8;
      gain = std::max(gain, 0.01);
      step = momentum * step - cfg.learning_rate * gain * g;
      y.data()[k] += step;
    }
    centre(y);
    KlEvaluation next = kl_and_gradient(aff.p, y, exaggeration_at(it + 1));

    // After exaggeration the objective is fixed, and a momentum step that
    // raises it is an overshoot: restart from the previous layout with no
    // velocity and backtrack a plain gradient step until KL does not rise.
    if (it >= cfg.exaggeration_iterations && next.kl > eval.kl) {
      update = Matrix(n, 2);
      gains = Matrix(n, 2, 1.0);
      y = previous;
      next = eval;
      double rate = cfg.learning_rate;
      for (int halving = 0; halving < 40; ++halving, rate *= 0.5) {
        Matrix trial = previous;
        for (std::size_t k = 0; k < trial.data().size(); ++k) trial.data()[k] -= rate * eval.gradient.data()[k];
        centre(trial);
        KlEvaluation tried = kl_and_gradient(aff.p, trial, 1.0);
        if (tried.kl <= eval.kl) {
          y = std::move(trial);
          next = std::move(tried);
          break;
        }
      }
    }
    if (!all_finite(y)) throw NaNGradient("t-SNE diverged at iteration " + std::to_string(it));
    eval = std::move(next);
  }
  out.trace.push_back(eval.kl);
  out.points = std::move(y);
  return out;
}

}  // namespace simlens
