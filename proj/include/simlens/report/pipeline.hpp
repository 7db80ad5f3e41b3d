#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "simlens/dimred/pca.hpp"
#include "simlens/dimred/tsne.hpp"
#include "simlens/dimred/umap.hpp"
#include "simlens/embedder/backend.hpp"
#include "simlens/report/report.hpp"
#include "simlens/saliency.hpp"
#include "simlens/simcore.hpp"

namespace simlens {

struct PipelineOptions {
  std::uint64_t seed = 7;
  Pooling pooling = Pooling::greedy_match;
  TsneConfig tsne;
  UmapConfig umap;
  std::size_t jobs = 0;  // 0: one per hardware thread
};

namespace detail {

inline std::size_t worker_count(std::size_t requested, std::size_t tasks) {
  std::size_t n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, tasks));
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Each result goes
// to its own slot, so output order never depends on scheduling. The first
// exception (lowest index) is rethrown after every worker has stopped.
template <class Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  const std::size_t workers = worker_count(jobs, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline void require_unique_ids(const std::vector<CodeFragment>& corpus) {
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (std::size_t j = i + 1; j < corpus.size(); ++j)
      if (corpus[i].id == corpus[j].id) throw InvalidArgument("duplicate fragment id '" + corpus[i].id + "'");
}

}  // namespace detail

// Encodes every fragment and removes delimiter tokens.
inline std::vector<EncodedFragment> encode_corpus(const std::vector<CodeFragment>& corpus, const Backend& backend,
                                                  std::size_t jobs = 0) {
  detail::require_unique_ids(corpus);
  std::vector<EncodedFragment> out(corpus.size());
  detail::parallel_for(corpus.size(), backend.concurrent_inference() ? jobs : 1, [&](std::size_t i) {
    out[i] = strip_special(backend.encode(corpus[i]));
  });
  return out;
}

inline Projection2D project(const PointSet& points, ProjectionMethod method, const PipelineOptions& opt) {
  switch (method) {
    case ProjectionMethod::pca: {
      Projection2D p = pca_project(points);
      p.seed = opt.seed;
      return p;
    }
    case ProjectionMethod::tsne: return tsne_project(points, opt.tsne, opt.seed);
    case ProjectionMethod::umap: return umap_project(points, opt.umap, opt.seed);
  }
  throw InvalidArgument("unknown projection method");
}

// Both fragments' token rows projected in one coordinate frame.
inline Projection2D project_pair(const EncodedFragment& a, const EncodedFragment& b, ProjectionMethod method,
                                 const PipelineOptions& opt) {
  const std::array<EmbeddingMatrix, 2> parts{a.embeddings, b.embeddings};
  return project(stack(parts), method, opt);
}

// Inputs must already be stripped of delimiter tokens.
inline PairReport analyze_pair(const EncodedFragment& a, const EncodedFragment& b, const PipelineOptions& opt) {
  PairReport r;
  r.first = a.fragment.id;
  r.second = b.fragment.id;
  r.similarity = fragment_similarity(a.embeddings, b.embeddings, opt.pooling);
  r.cosine = cosine_matrix(a.embeddings, b.embeddings);
  r.attention = attention_product(a.attention, b.attention);
  for (auto m : {ProjectionMethod::pca, ProjectionMethod::tsne, ProjectionMethod::umap})
    r.projections.push_back(project_pair(a, b, m, opt));
  r.saliency = saliency_map(a.embeddings, b.embeddings, opt.pooling);
  return r;
}

inline FragmentInfo fragment_info(const EncodedFragment& f) {
  FragmentInfo info{f.fragment.id, f.fragment.language, f.fragment.source, {}};
  for (const auto& t : f.tokens.tokens)
    if (!t.is_special) info.tokens.push_back(t);
  return info;
}

// compare: one pair, six figures. report_all: every unordered pair of the
// corpus in corpus order, plus the fragment heatmap.
inline ComparisonReport build_report(const std::vector<CodeFragment>& corpus, const Backend& backend,
                                     const PipelineOptions& opt, FigureSet figures) {
  if (corpus.size() < 2) throw InvalidArgument("a report needs at least two fragments");
  if (figures == FigureSet::compare && corpus.size() != 2) {
    throw InvalidArgument("compare takes exactly two fragments");
  }
  const auto encoded = encode_corpus(corpus, backend, opt.jobs);

  ComparisonReport r;
  r.figures = figures;
  r.backend = backend.describe();
  r.seed = opt.seed;
  r.pooling = opt.pooling;
  for (const auto& f : encoded) r.fragments.push_back(fragment_info(f));
  r.fragment_similarity = fragment_matrix(encoded, opt.pooling);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < encoded.size(); ++i)
    for (std::size_t j = i + 1; j < encoded.size(); ++j) pairs.emplace_back(i, j);
  r.pairs.resize(pairs.size());
  detail::parallel_for(pairs.size(), opt.jobs, [&](std::size_t k) {
    r.pairs[k] = analyze_pair(encoded[pairs[k].first], encoded[pairs[k].second], opt);
  });
  return r;
}

// Sole owner of the output directory. Each file is written to a temporary
// name and renamed, so a reader never sees a partial file.
class OutputWriter {
public:
  explicit OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  std::filesystem::path write(const std::string& name, std::string_view content) {
    std::lock_guard lock(mutex_);
    const auto target = dir_ / name;
    const auto tmp = dir_ / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
    written_.push_back(target);
    return target;
  }

  const std::vector<std::filesystem::path>& written() const noexcept { return written_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::vector<std::filesystem::path> written_;
};

inline constexpr std::string_view kReportFile = "report.json";

inline std::vector<std::filesystem::path> write_report(const ComparisonReport& r, const std::filesystem::path& dir,
                                                       bool with_figures = true) {
  OutputWriter writer(dir);
  writer.write(std::string(kReportFile), serialize(r));
  if (with_figures)
    for (const auto& f : render_figures(r)) writer.write(f.filename, f.content);
  return writer.written();
}

}  // namespace simlens
