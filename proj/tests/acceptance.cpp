// Acceptance suite: one PASS / FAIL / SKIP line per criterion. Exits
// non-zero when any criterion fails; a skip is not a failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "simlens/simlens.hpp"
#include "support.hpp"

using namespace simlens;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::vector<EncodedFragment> fixture_corpus() {
  BackendConfig cfg;
  cfg.seed = 7;
  return encode_corpus(fixtures::corpus(), *make_backend(cfg), 1);
}

// 1. Stub attention rows sum to one; attention products lie in [0, 1].
Outcome attention_invariants() {
  const auto corpus = fixture_corpus();
  double worst_row = 0.0, lo = 1.0, hi = 0.0;
  for (const auto& f : corpus)
    for (const auto& h : f.attention.heads)
      for (std::size_t i = 0; i < h.rows(); ++i) {
        const auto r = h.row(i);
        worst_row = std::max(worst_row, std::abs(std::accumulate(r.begin(), r.end(), 0.0) - 1.0));
      }
  for (const auto& a : corpus)
    for (const auto& b : corpus)
      for (double v : attention_product(a.attention, b.attention).values.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  return verdict(worst_row <= 1e-5 && lo >= 0.0 && hi <= 1.0,
                 "max |row sum - 1| " + fmt(worst_row) + ", products in [" + fmt(lo) + ", " + fmt(hi) + "]");
}

// 2. Cosine: unit self-diagonal, positive row-scale invariance, brute force.
Outcome cosine_correctness() {
  double diag = 0.0;
  for (const auto& f : fixture_corpus()) {
    const auto s = cosine_matrix(f.embeddings, f.embeddings);
    for (std::size_t i = 0; i < s.rows(); ++i) diag = std::max(diag, std::abs(s.values(i, i) - 1.0));
  }
  const auto a = support::embedding("a", support::gaussian_matrix(8, 16, 2001));
  const auto b = support::embedding("b", support::gaussian_matrix(8, 16, 2002));
  const auto s = cosine_matrix(a, b);
  auto scaled = a;
  Rng rng(2003);
  for (std::size_t i = 0; i < scaled.rows(); ++i) {
    const double c = 0.001 + 1000.0 * rng.uniform();
    for (double& v : scaled.values.row(i)) v *= c;
  }
  const auto t = cosine_matrix(scaled, b);
  double scale_err = 0.0, brute_err = 0.0;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      scale_err = std::max(scale_err, std::abs(t.values(i, j) - s.values(i, j)));
      double d = 0, na = 0, nb = 0;
      for (std::size_t c = 0; c < 16; ++c) {
        d += a.values(i, c) * b.values(j, c);
        na += a.values(i, c) * a.values(i, c);
        nb += b.values(j, c) * b.values(j, c);
      }
      brute_err = std::max(brute_err, std::abs(s.values(i, j) - d / std::sqrt(na) / std::sqrt(nb)));
    }
  // Greedy matching sees rows only through cosines; mean pooling averages
  // rows first, so it is invariant to one shared constant only.
  scale_err = std::max(scale_err, std::abs(fragment_similarity(scaled, b, Pooling::greedy_match).value -
                                           fragment_similarity(a, b, Pooling::greedy_match).value));
  auto uniform = a;
  for (double& v : uniform.values.data()) v *= 37.5;
  scale_err = std::max(scale_err, std::abs(fragment_similarity(uniform, b, Pooling::mean_pool_cosine).value -
                                           fragment_similarity(a, b, Pooling::mean_pool_cosine).value));
  return verdict(diag <= 1e-6 && scale_err <= 1e-9 && brute_err <= 1e-10,
                 "diagonal " + fmt(diag) + ", scaling " + fmt(scale_err) + ", brute force " + fmt(brute_err));
}

// 3. PCA against a full Eigen SVD, and the collinear analytic case.
Outcome pca_oracle() {
  const Matrix x = support::gaussian_matrix(50, 20, 3001);
  Eigen::MatrixXd m(50, 20);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 20; ++j) m(i, j) = x(i, j);
  m.rowwise() -= m.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  Eigen::MatrixXd v = svd.matrixV().leftCols(2);
  for (int k = 0; k < 2; ++k) {
    Eigen::Index lead = 0;
    v.col(k).cwiseAbs().maxCoeff(&lead);
    if (v(lead, k) < 0) v.col(k) *= -1.0;
  }
  const Eigen::MatrixXd ref = m * v;
  const auto proj = pca_project(unlabeled(x));
  double err = 0.0;
  for (int i = 0; i < 50; ++i)
    for (int k = 0; k < 2; ++k) err = std::max(err, std::abs(proj.points(i, k) - ref(i, k)));

  const auto line = pca_project(unlabeled(Matrix{{0, 0}, {1, 1}, {2, 2}}));
  const double r2 = std::sqrt(2.0);
  double analytic = std::max({std::abs(line.points(0, 0) + r2), std::abs(line.points(1, 0)),
                              std::abs(line.points(2, 0) - r2)});
  for (int i = 0; i < 3; ++i) analytic = std::max(analytic, std::abs(line.points(i, 1)));
  return verdict(err <= 1e-8 && analytic <= 1e-9,
                 "max |coord - oracle| " + fmt(err) + ", collinear error " + fmt(analytic));
}

// Largest rise of a w-wide moving average over trace[from, end).
double worst_moving_average_rise(const std::vector<double>& trace, std::size_t from, std::size_t w) {
  double worst = -INFINITY, prev = NAN;
  for (std::size_t t = from; t + w <= trace.size(); ++t) {
    const double avg = std::accumulate(trace.begin() + t, trace.begin() + t + w, 0.0) / static_cast<double>(w);
    if (!std::isnan(prev)) worst = std::max(worst, avg - prev);
    prev = avg;
  }
  return worst;
}

// 4. t-SNE: entropy calibration, gradient check, post-exaggeration descent.
Outcome tsne_checks() {
  const Matrix x = support::gaussian_matrix(20, 6, 4001);
  const Matrix d = squared_distances(x);
  double entropy_err = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto row = calibrate_row(d.row(i), i, 5.0);
    double h = 0.0;
    for (double p : row.p)
      if (p > 0) h -= p * std::log2(p);
    entropy_err = std::max(entropy_err, std::abs(h - std::log2(5.0)));
  }

  const auto aff = joint_probabilities(support::gaussian_matrix(6, 3, 4002), 1.5);
  Matrix y = support::gaussian_matrix(6, 2, 4003);
  const auto g = kl_and_gradient(aff.p, y).gradient;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < y.data().size(); ++k) {
    const double keep = y.data()[k];
    y.data()[k] = keep + 1e-6;
    const double up = kl_and_gradient(aff.p, y).kl;
    y.data()[k] = keep - 1e-6;
    const double down = kl_and_gradient(aff.p, y).kl;
    y.data()[k] = keep;
    const double fd = (up - down) / 2e-6;
    num += (fd - g.data()[k]) * (fd - g.data()[k]);
    den += fd * fd;
  }
  const double grad_err = std::sqrt(num / den);

  // Post-exaggeration descent on synthetic clusters and on a real fixture pair.
  TsneConfig cfg;
  const auto synthetic = tsne_project(unlabeled(support::two_clusters(20, 10, 6.0, 4004)), cfg, 7);
  const auto corpus = fixture_corpus();
  const auto pair = project_pair(corpus[0], corpus[2], ProjectionMethod::tsne, PipelineOptions{});
  const std::size_t from = cfg.exaggeration_iterations + 1;
  const double rise = std::max(worst_moving_average_rise(synthetic.trace, from, 10),
                               worst_moving_average_rise(pair.trace, from, 10));
  return verdict(entropy_err <= 1e-4 && grad_err < 1e-4 && rise <= 0.0,
                 "entropy error " + fmt(entropy_err) + " bits, gradient rel. error " + fmt(grad_err) +
                     ", worst 10-iteration average rise " + fmt(rise));
}

// 5. UMAP: graph invariants, loss descent, cluster separation.
Outcome umap_checks() {
  const auto g = umap_graph(support::gaussian_matrix(20, 5, 5001), UmapConfig{});
  bool nn_one = true;
  double sigma_err = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    nn_one = nn_one && g.knn[i].front().weight == 1.0;
    double s = 0.0;
    for (const auto& nb : g.knn[i]) s += std::exp(-(nb.distance - g.rho[i]) / g.sigma[i]);
    sigma_err = std::max(sigma_err, std::abs(s - std::log2(static_cast<double>(g.k))));
  }
  bool in_range = !g.edges.empty();
  for (const auto& e : g.edges) in_range = in_range && e.weight > 0.0 && e.weight <= 1.0;

  const Matrix x = support::two_clusters(15, 8, 12.0, 305);
  UmapConfig cfg;
  cfg.n_neighbors = 8;
  const auto proj = umap_project(unlabeled(x), cfg, 7);
  const auto& t = proj.trace;
  const double start = std::accumulate(t.begin(), t.begin() + 5, 0.0) / 5.0;
  const double end = std::accumulate(t.end() - 5, t.end(), 0.0) / 5.0;
  double centre[2][2] = {};
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t c = 0; c < 2; ++c) centre[i / 15][c] += proj.points(i, c) / 15.0;
  double within = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = i + 1; j < 30; ++j)
      if (i / 15 == j / 15) {
        within += std::sqrt(squared_distance(proj.points.row(i), proj.points.row(j)));
        ++pairs;
      }
  const double ratio = std::hypot(centre[0][0] - centre[1][0], centre[0][1] - centre[1][1]) / (within / pairs);
  return verdict(nn_one && sigma_err < 1e-4 && in_range && end < start && ratio > 3.0,
                 std::string("nearest weight 1: ") + (nn_one ? "yes" : "no") + ", sigma residual " + fmt(sigma_err) +
                     ", weights in (0,1]: " + (in_range ? "yes" : "no") + ", loss " + fmt(start) + " -> " +
                     fmt(end) + ", separation " + fmt(ratio));
}

// Keeps the first row of each distinct token surface; repeats tie exactly.
EmbeddingMatrix distinct_tokens(const EmbeddingMatrix& e) {
  EmbeddingMatrix out{e.fragment_id, {}, {}};
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < e.rows(); ++i)
    if (std::find(out.labels.begin(), out.labels.end(), e.labels[i]) == out.labels.end()) {
      out.labels.push_back(e.labels[i]);
      keep.push_back(i);
    }
  out.values = Matrix(keep.size(), e.dim());
  for (std::size_t r = 0; r < keep.size(); ++r)
    std::copy(e.values.row(keep[r]).begin(), e.values.row(keep[r]).end(), out.values.row(r).begin());
  return out;
}

// 6. Saliency: finite differences (greedy) and the mean-pool identities.
Outcome saliency_checks() {
  const auto corpus = fixture_corpus();
  EmbeddingMatrix a = distinct_tokens(corpus[0].embeddings);
  EmbeddingMatrix b = distinct_tokens(corpus[4].embeddings);
  const auto g = similarity_gradient(a, b, Pooling::greedy_match);
  double num = 0.0, den = 0.0;
  for (auto* side : {&a, &b}) {
    const Matrix& grad = side == &a ? g.wrt_first : g.wrt_second;
    for (std::size_t k = 0; k < side->values.data().size(); ++k) {
      double& x = side->values.data()[k];
      const double keep = x;
      x = keep + 1e-5;
      const double up = fragment_similarity(a, b, Pooling::greedy_match).value;
      x = keep - 1e-5;
      const double down = fragment_similarity(a, b, Pooling::greedy_match).value;
      x = keep;
      const double fd = (up - down) / 2e-5;
      num += (fd - grad.data()[k]) * (fd - grad.data()[k]);
      den += fd * fd;
    }
  }
  const double fd_err = std::sqrt(num / den);

  double spread = 0.0, self = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& e = corpus[i].embeddings;
    const auto s = saliency_map(e, corpus[(i + 1) % corpus.size()].embeddings, Pooling::mean_pool_cosine);
    for (double v : s.first.scores) spread = std::max(spread, std::abs(v - s.first.scores.front()));
    for (double v : saliency_map(e, e, Pooling::mean_pool_cosine).first.scores) self = std::max(self, std::abs(v));
  }
  return verdict(fd_err < 1e-5 && spread <= 1e-9 && self <= 1e-9,
                 "greedy FD rel. error " + fmt(fd_err) + ", mean-pool spread " + fmt(spread) + ", self " + fmt(self));
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    out[e.path().filename().string()] = s.str();
  }
  return out;
}

// 7. report-all through the CLI, twice: 1 heatmap, 30 scatters,
// 10 saliency figures, 1 report, identical bytes.
Outcome end_to_end() {
  const fs::path root = fs::temp_directory_path() / "simlens_acceptance";
  fs::remove_all(root);
  double slowest = 0.0;
  for (const char* run : {"a", "b"}) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string cmd = std::string(SIMLENS_CLI) + " report-all --backend stub --seed 7 --out " +
                            (root / run).string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {Status::fail, "report-all exited abnormally"};
    slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  const auto first = snapshot(root / "a");
  const bool same = first == snapshot(root / "b");
  int heat = 0, scatter = 0, sal = 0, report = 0, other = 0;
  for (const auto& [name, _] : first) {
    if (name == "report.json") ++report;
    else if (name == "fragments_heatmap.svg") ++heat;
    else if (name.ends_with("_saliency.svg")) ++sal;
    else if (name.ends_with("_pca.svg") || name.ends_with("_tsne.svg") || name.ends_with("_umap.svg")) ++scatter;
    else ++other;
  }
  fs::remove_all(root);
  return verdict(heat == 1 && scatter == 30 && sal == 10 && report == 1 && other == 0 && same && slowest < 60.0,
                 std::to_string(heat) + " heatmap, " + std::to_string(scatter) + " scatters, " + std::to_string(sal) +
                     " saliency, " + std::to_string(report) + " report, " + std::to_string(other) + " other; " +
                     (same ? "byte-identical" : "runs differ") + "; slowest run " + fmt(slowest) + " s");
}

// 8. With real weights: bubble is closer to insertion than to quick.
Outcome pretrained_ordering() {
  const char* dir = std::getenv("SIMLENS_MODEL_DIR");
  if (dir == nullptr || *dir == '\0') return {Status::skip, "SIMLENS_MODEL_DIR not set"};
  BackendConfig cfg;
  cfg.kind = BackendKind::model;
  try {
    const auto backend = make_backend(cfg);
    std::vector<CodeFragment> corpus{*fixtures::find("bubble"), *fixtures::find("insertion"), *fixtures::find("quick")};
    const auto m = fragment_matrix(encode_corpus(corpus, *backend), Pooling::greedy_match);
    const double bi = m.values(0, 1), bq = m.values(0, 2);
    return verdict(bi > bq, "sim(bubble, insertion) " + fmt(bi) + " vs sim(bubble, quick) " + fmt(bq));
  } catch (const BackendError& e) {
    return {Status::skip, std::string("no usable model: ") + e.what()};
  }
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "attention invariants", 5.0, attention_invariants},
      {2, "cosine correctness", 0.0, cosine_correctness},
      {3, "PCA oracle equivalence", 0.0, pca_oracle},
      {4, "t-SNE", 30.0, tsne_checks},
      {5, "UMAP", 0.0, umap_checks},
      {6, "saliency", 0.0, saliency_checks},
      {7, "end-to-end report-all", 0.0, end_to_end},
      {8, "pre-trained similarity ordering", 0.0, pretrained_ordering},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.status == Status::pass && c.limit_s > 0.0 && secs >= c.limit_s) {
      o = {Status::fail, o.detail + "; over the " + fmt(c.limit_s) + " s limit"};
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    std::printf("%s %d %s: %s (%.2f s)\n", tag, c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.status == Status::fail;
  }
  return failures == 0 ? 0 : 1;
}
