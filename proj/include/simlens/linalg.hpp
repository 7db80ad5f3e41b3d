#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "simlens/matrix.hpp"

namespace simlens {

// Thin singular value decomposition x = u * diag(s) * v^T with
// u: m x r, v: n x r, r = min(m, n), s sorted in descending order.
struct Svd {
  Matrix u;
  std::vector<double> s;
  Matrix v;
};

namespace detail {

// Re-orthonormalise columns of `q` flagged invalid (vectors attached to
// zero singular values) by Gram-Schmidt against the valid ones, drawing
// candidates from the standard basis.
inline void complete_orthonormal(Matrix& q, std::vector<bool> valid) {
  const std::size_t m = q.rows();
  for (std::size_t c = 0; c < q.cols(); ++c) {
    if (valid[c]) continue;
    for (std::size_t e = 0; e < m; ++e) {
      std::vector<double> cand(m, 0.0);
      cand[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t o = 0; o < q.cols(); ++o) {
          if (!valid[o]) continue;
          double proj = 0.0;
          for (std::size_t r = 0; r < m; ++r) proj += cand[r] * q(r, o);
          for (std::size_t r = 0; r < m; ++r) cand[r] -= proj * q(r, o);
        }
      }
      const double nrm = norm(cand);
      if (nrm > 1e-6) {
        for (std::size_t r = 0; r < m; ++r) q(r, c) = cand[r] / nrm;
        valid[c] = true;
        break;
      }
    }
  }
}

// One-sided (Hestenes) Jacobi on the columns of a (m >= n). On return the
// columns of a are u_k * s_k and v holds the accumulated rotations.
// Sweeps run on transposed copies so that every column is contiguous.
inline void hestenes(Matrix& a, Matrix& v) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix at = a.transposed();
  Matrix vt(n, n);
  for (std::size_t i = 0; i < n; ++i) vt(i, i) = 1.0;
  constexpr double tol = 1e-15;
  // Columns below this squared norm are rounding noise of a rank-deficient
  // input; rotating them never converges and does not change the result.
  double total = 0.0;
  for (double x : at.data()) total += x * x;
  const double negligible = total * 1e-28;
  auto rotate = [](std::span<double> x, std::span<double> y, double c, double s) {
    for (std::size_t r = 0; r < x.size(); ++r) {
      const double xp = x[r], yq = y[r];
      x[r] = c * xp - s * yq;
      y[r] = s * xp + c * yq;
    }
  };
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const auto cp = at.row(p);
        const auto cq = at.row(q);
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
          alpha += cp[r] * cp[r];
          beta += cq[r] * cq[r];
          gamma += cp[r] * cq[r];
        }
        if (alpha <= negligible || beta <= negligible) continue;
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(cp, cq, c, s);
        rotate(vt.row(p), vt.row(q), c, s);
      }
    }
    if (!rotated) break;
  }
  a = at.transposed();
  v = vt.transposed();
}

}  // namespace detail

inline Svd svd(const Matrix& x) {
  const bool tall = x.rows() >= x.cols();
  Matrix a = tall ? x : x.transposed();
  Matrix rot;
  detail::hestenes(a, rot);

  const std::size_t r = a.cols();
  std::vector<double> sv(r);
  for (std::size_t k = 0; k < r; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, k) * a(i, k);
    sv[k] = std::sqrt(s);
  }
  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return sv[i] > sv[j]; });

  const double smax = r == 0 ? 0.0 : sv[order.front()];
  const double cutoff = smax * 1e-13 * static_cast<double>(std::max(x.rows(), x.cols()));
  Matrix left(a.rows(), r);
  Matrix right(rot.rows(), r);
  std::vector<double> s(r);
  std::vector<bool> valid(r, true);
  for (std::size_t k = 0; k < r; ++k) {
    const std::size_t src = order[k];
    s[k] = sv[src];
    valid[k] = sv[src] > cutoff && sv[src] > 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) left(i, k) = valid[k] ? a(i, src) / sv[src] : 0.0;
    for (std::size_t i = 0; i < rot.rows(); ++i) right(i, k) = rot(i, src);
  }
  detail::complete_orthonormal(left, valid);

  if (tall) return Svd{std::move(left), std::move(s), std::move(right)};
  return Svd{std::move(right), std::move(s), std::move(left)};
}

}  // namespace simlens
