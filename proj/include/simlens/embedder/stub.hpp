#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "simlens/embedder/types.hpp"
#include "simlens/rng.hpp"

namespace simlens::stub {

// Split rule of the stub tokenizer:
//   * whitespace separates tokens and is never emitted;
//   * a word token is a maximal run of [A-Za-z0-9_] or bytes >= 0x80;
//   * anything else is an operator: the longest entry of kOperators that
//     matches at the cursor, otherwise a single byte.
// Consequently the non-special surfaces concatenate to the source with all
// whitespace removed. The stub emits no delimiter tokens.
inline constexpr std::array<std::string_view, 24> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "==", "!=", "<=", ">=", "//", "**", "+=",
    "-=",  "*=",  "/=",  "%=",  "&=",  "|=", "^=", "->", "<<", ">>", ":=", "@="};

inline bool is_space(unsigned char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_word(unsigned char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || c >= 0x80;
}

inline std::int64_t token_id(std::string_view surface) noexcept {
  return static_cast<std::int64_t>(fnv1a64(surface) & 0x7FFFFFFFULL);
}

inline TokenSequence tokenize(const CodeFragment& fragment) {
  validate(fragment);
  const std::string_view src = fragment.source;
  TokenSequence seq{fragment.id, {}};
  std::size_t i = 0;
  while (i < src.size()) {
    const auto c = static_cast<unsigned char>(src[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    if (is_word(c)) {
      while (end < src.size() && is_word(static_cast<unsigned char>(src[end]))) ++end;
    } else {
      for (std::string_view op : kOperators) {
        if (src.substr(i, op.size()) == op) {
          end = i + op.size();
          break;
        }
      }
    }
    std::string surface(src.substr(i, end - i));
    const auto id = token_id(surface);
    seq.tokens.push_back(Token{id, std::move(surface), CharSpan{i, end}, false});
    i = end;
  }
  if (seq.tokens.size() > kMaxSequenceLength) {
    throw SequenceTooLong("fragment '" + fragment.id + "' has " +
                          std::to_string(seq.tokens.size()) + " tokens (limit " +
                          std::to_string(kMaxSequenceLength) + ")");
  }
  return seq;
}

// Vector for one token surface: d standard normals drawn from a stream keyed
// on (seed, surface). Identical surfaces always get identical rows.
inline std::vector<double> token_vector(std::string_view surface, std::uint64_t seed,
                                        std::size_t dim) {
  Rng rng(mix_seed(seed, fnv1a64(surface)));
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

inline EmbeddingMatrix embed(const TokenSequence& seq, std::uint64_t seed, std::size_t dim) {
  if (seq.tokens.empty()) throw EmptyInput("embed: empty token sequence");
  if (dim == 0) throw InvalidArgument("embed: stub dimension must be positive");
  EmbeddingMatrix out{seq.fragment_id, {}, Matrix(seq.size(), dim)};
  out.labels.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto v = token_vector(seq.tokens[i].surface, seed, dim);
    std::copy(v.begin(), v.end(), out.values.row(i).begin());
    out.labels.push_back(seq.tokens[i].surface);
  }
  return out;
}

// Projection matrices of one head, each (d / H) x d.
struct HeadWeights {
  Matrix query;
  Matrix key;
  Matrix value;
};

inline constexpr std::uint64_t kWeightSalt = 0x5354554257454947ULL;

// Draws W_Q, W_K, W_V for every head from one stream: head 0 query, key,
// value, then head 1, and so on; entries are N(0, 1/d).
inline std::vector<HeadWeights> head_weights(std::uint64_t seed, std::size_t dim,
                                             std::size_t heads) {
  if (heads == 0 || dim % heads != 0) {
    throw InvalidArgument("stub: dimension " + std::to_string(dim) +
                          " is not divisible by head count " + std::to_string(heads));
  }
  const std::size_t dk = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  Rng rng(mix_seed(seed, kWeightSalt));
  auto draw = [&] {
    Matrix m(dk, dim);
    for (double& x : m.data()) x = rng.normal() * scale;
    return m;
  };
  std::vector<HeadWeights> out;
  out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    HeadWeights w;
    w.query = draw();
    w.key = draw();
    w.value = draw();
    out.push_back(std::move(w));
  }
  return out;
}

// In-place numerically stable softmax over each row.
inline void softmax_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& x : row) {
      x = std::exp(x - mx);
      sum += x;
    }
    for (double& x : row) x /= sum;
  }
}

// softmax(Q K^T / sqrt(d_k)) for one head, with Q = E W_Q^T and K = E W_K^T.
inline Matrix attention_probabilities(const Matrix& embeddings, const HeadWeights& w) {
  const Matrix q = multiply_transposed(embeddings, w.query);
  const Matrix k = multiply_transposed(embeddings, w.key);
  Matrix logits = multiply_transposed(q, k);
  const double inv = 1.0 / std::sqrt(static_cast<double>(w.query.rows()));
  for (double& x : logits.data()) x *= inv;
  softmax_rows(logits);
  return logits;
}

// Head context vectors A V with V = E W_V^T, n x d_k. Not part of the
// attention tensor; exposed for completeness of the attention block.
inline Matrix attention_context(const Matrix& probabilities, const Matrix& embeddings,
                                const HeadWeights& w) {
  const Matrix v = multiply_transposed(embeddings, w.value);
  Matrix out(probabilities.rows(), v.cols());
  for (std::size_t i = 0; i < probabilities.rows(); ++i)
    for (std::size_t j = 0; j < probabilities.cols(); ++j) {
      const double a = probabilities(i, j);
      for (std::size_t c = 0; c < v.cols(); ++c) out(i, c) += a * v(j, c);
    }
  return out;
}

inline AttentionTensor attentions(const EmbeddingMatrix& embeddings, std::uint64_t seed,
                                  std::size_t heads) {
  if (embeddings.rows() == 0) throw EmptyInput("attentions: empty token sequence");
  const auto weights = head_weights(seed, embeddings.dim(), heads);
  AttentionTensor out{embeddings.fragment_id, embeddings.labels, {}};
  out.heads.reserve(heads);
  for (const auto& w : weights) out.heads.push_back(attention_probabilities(embeddings.values, w));
  return out;
}

}  // namespace simlens::stub
