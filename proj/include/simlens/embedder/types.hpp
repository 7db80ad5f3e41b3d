#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "simlens/error.hpp"
#include "simlens/matrix.hpp"

namespace simlens {

// Longest token sequence (including delimiter tokens) accepted by any
// backend. Longer inputs are rejected rather than truncated.
inline constexpr std::size_t kMaxSequenceLength = 512;

struct CodeFragment {
  std::string id;
  std::string language = "python";
  std::string source;
};

inline bool is_blank(std::string_view s) noexcept {
  for (unsigned char c : s)
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r' && c != '\f' && c != '\v') return false;
  return true;
}

// Throws EmptyInput for blank sources and InvalidArgument for empty ids.
inline void validate(const CodeFragment& f) {
  if (f.id.empty()) throw InvalidArgument("code fragment has an empty id");
  if (is_blank(f.source)) throw EmptyInput("code fragment '" + f.id + "' is blank");
}

// Byte offsets [begin, end) into CodeFragment::source.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct Token {
  std::int64_t token_id = 0;
  std::string surface;
  CharSpan span;
  bool is_special = false;
  friend bool operator==(const Token&, const Token&) = default;
};

struct TokenSequence {
  std::string fragment_id;
  std::vector<Token> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  std::size_t code_token_count() const noexcept {
    std::size_t n = 0;
    for (const auto& t : tokens) n += t.is_special ? 0 : 1;
    return n;
  }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// n x d contextual vectors, one row per token. `labels` carries the token
// surfaces so downstream matrices and plots can be labelled.
struct EmbeddingMatrix {
  std::string fragment_id;
  std::vector<std::string> labels;
  Matrix values;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t dim() const noexcept { return values.cols(); }
};

// H heads of n x n row-stochastic attention probabilities.
struct AttentionTensor {
  std::string fragment_id;
  std::vector<std::string> labels;
  std::vector<Matrix> heads;

  std::size_t head_count() const noexcept { return heads.size(); }
  std::size_t size() const noexcept { return heads.empty() ? 0 : heads.front().rows(); }
};

enum class BackendKind { stub, model };

struct BackendConfig {
  BackendKind kind = BackendKind::stub;
  std::filesystem::path model_path;
  std::filesystem::path tokenizer_path;
  std::uint64_t seed = 0;
  std::size_t stub_dim = 64;
  std::size_t stub_heads = 4;
};

}  // namespace simlens
