// Library walk-through: encode two fixtures with the stub backend, score
// them, and print the tokens that drive the score.

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "simlens/simlens.hpp"

int main() {
  simlens::BackendConfig cfg;
  cfg.seed = 7;
  const auto backend = simlens::make_backend(cfg);

  const auto a = simlens::strip_special(backend->encode(*simlens::fixtures::find("bubble")));
  const auto b = simlens::strip_special(backend->encode(*simlens::fixtures::find("insertion")));

  const auto greedy = simlens::fragment_similarity(a.embeddings, b.embeddings, simlens::Pooling::greedy_match);
  const auto mean = simlens::fragment_similarity(a.embeddings, b.embeddings, simlens::Pooling::mean_pool_cosine);
  std::printf("%s vs %s: greedy %.4f, mean-pool %.4f\n", a.fragment.id.c_str(), b.fragment.id.c_str(), greedy.value,
              mean.value);

  const auto attn = simlens::attention_product(a.attention, b.attention);
  std::printf("attention-product matrix: %zu x %zu\n", attn.rows(), attn.cols());

  const auto sal = simlens::saliency_map(a.embeddings, b.embeddings);
  std::vector<std::size_t> order(sal.first.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return sal.first.scores[x] > sal.first.scores[y]; });
  std::printf("most salient tokens of %s:\n", a.fragment.id.c_str());
  for (std::size_t k = 0; k < std::min<std::size_t>(5, order.size()); ++k) {
    const auto i = order[k];
    std::printf("  %-10s %.5f\n", a.tokens.tokens[i].surface.c_str(), sal.first.scores[i]);
  }

  const std::array<simlens::EmbeddingMatrix, 2> parts{a.embeddings, b.embeddings};
  const auto layout = simlens::pca_project(simlens::stack(parts));
  std::printf("PCA layout of %zu tokens, first point (%.3f, %.3f)\n", layout.points.rows(), layout.points(0, 0),
              layout.points(0, 1));
  return 0;
}
