#pragma once

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "simlens/embedder/encoder.hpp"
#include "simlens/embedder/stub.hpp"
#include "simlens/embedder/subword_tokenizer.hpp"
#include "simlens/embedder/types.hpp"

namespace simlens {

// Everything one backend pass yields for a fragment.
struct EncodedFragment {
  CodeFragment fragment;
  TokenSequence tokens;
  EmbeddingMatrix embeddings;
  AttentionTensor attention;
};

class Backend {
public:
  virtual ~Backend() = default;

  virtual TokenSequence tokenize(const CodeFragment& fragment) const = 0;
  virtual EmbeddingMatrix embed(const TokenSequence& seq) const = 0;

  virtual AttentionTensor attentions(const TokenSequence& seq) const {
    (void)seq;
    throw AttentionUnavailable("backend '" + name() + "' exports no attention probabilities");
  }

  // Tokenize, embed and extract attention in one go. Backends that share a
  // forward pass between embeddings and attention override this.
  virtual EncodedFragment encode(const CodeFragment& fragment) const {
    EncodedFragment out{fragment, tokenize(fragment), {}, {}};
    out.embeddings = embed(out.tokens);
    out.attention = attentions(out.tokens);
    return out;
  }

  virtual std::string name() const = 0;
  // Whether embed/attentions may run on several threads at once.
  virtual bool concurrent_inference() const { return true; }
  // Configuration echo for reports. Paths are reduced to basenames.
  virtual nlohmann::json describe() const = 0;
};

class StubBackend final : public Backend {
public:
  explicit StubBackend(const BackendConfig& cfg)
      : seed_(cfg.seed), dim_(cfg.stub_dim), heads_(cfg.stub_heads) {
    if (dim_ == 0 || heads_ == 0 || dim_ % heads_ != 0) {
      throw InvalidArgument("stub backend: dim must be a positive multiple of heads");
    }
  }

  TokenSequence tokenize(const CodeFragment& fragment) const override {
    return stub::tokenize(fragment);
  }
  EmbeddingMatrix embed(const TokenSequence& seq) const override {
    return stub::embed(seq, seed_, dim_);
  }
  AttentionTensor attentions(const TokenSequence& seq) const override {
    return stub::attentions(embed(seq), seed_, heads_);
  }
  EncodedFragment encode(const CodeFragment& fragment) const override {
    EncodedFragment out{fragment, tokenize(fragment), {}, {}};
    out.embeddings = embed(out.tokens);
    out.attention = stub::attentions(out.embeddings, seed_, heads_);
    return out;
  }

  std::string name() const override { return "stub"; }
  nlohmann::json describe() const override {
    return {{"kind", "stub"}, {"seed", seed_}, {"stub_dim", dim_}, {"stub_heads", heads_}};
  }

private:
  std::uint64_t seed_;
  std::size_t dim_;
  std::size_t heads_;
};

class ModelBackend final : public Backend {
public:
  ModelBackend(const std::filesystem::path& model_path, const std::filesystem::path& tokenizer_path)
      : model_path_(model_path), tokenizer_path_(tokenizer_path) {
    if (!std::filesystem::exists(tokenizer_path)) {
      throw TokenizerLoadError("tokenizer definition not found: " + tokenizer_path.string());
    }
    tokenizer_ = SubwordTokenizer::from_file(tokenizer_path);
    encoder_ = TransformerEncoder::load(model_path);
    if (tokenizer_.vocab_size() > encoder_.config().vocab) {
      throw DimensionMismatch("tokenizer vocabulary (" + std::to_string(tokenizer_.vocab_size()) +
                              ") is larger than the model vocabulary (" +
                              std::to_string(encoder_.config().vocab) + ")");
    }
  }

  TokenSequence tokenize(const CodeFragment& fragment) const override {
    return tokenizer_.tokenize(fragment);
  }
  EmbeddingMatrix embed(const TokenSequence& seq) const override {
    return to_embeddings(seq, run(seq));
  }
  AttentionTensor attentions(const TokenSequence& seq) const override {
    return to_attention(seq, run(seq));
  }
  EncodedFragment encode(const CodeFragment& fragment) const override {
    EncodedFragment out{fragment, tokenize(fragment), {}, {}};
    auto result = run(out.tokens);
    out.embeddings = to_embeddings(out.tokens, result);
    out.attention = to_attention(out.tokens, std::move(result));
    return out;
  }

  const EncoderConfig& encoder_config() const noexcept { return encoder_.config(); }
  std::string name() const override { return "model"; }
  nlohmann::json describe() const override {
    return {{"kind", "model"},
            {"model", model_path_.filename().string()},
            {"tokenizer", tokenizer_path_.filename().string()},
            {"model_type", encoder_.config().model_type},
            {"hidden_size", encoder_.config().hidden},
            {"heads", encoder_.config().heads},
            {"layers", encoder_.config().layers}};
  }

private:
  std::filesystem::path model_path_;
  std::filesystem::path tokenizer_path_;
  SubwordTokenizer tokenizer_;
  TransformerEncoder encoder_;

  EncoderOutput run(const TokenSequence& seq) const {
    if (seq.tokens.empty()) throw EmptyInput("model backend: empty token sequence");
    std::vector<std::int64_t> ids;
    ids.reserve(seq.size());
    for (const auto& t : seq.tokens) ids.push_back(t.token_id);
    auto out = encoder_.forward(ids);
    if (out.hidden.cols() != encoder_.config().hidden) {
      throw DimensionMismatch("model output width differs from the declared hidden size");
    }
    return out;
  }

  static std::vector<std::string> labels_of(const TokenSequence& seq) {
    std::vector<std::string> labels;
    labels.reserve(seq.size());
    for (const auto& t : seq.tokens) labels.push_back(t.surface);
    return labels;
  }

  static EmbeddingMatrix to_embeddings(const TokenSequence& seq, const EncoderOutput& out) {
    return EmbeddingMatrix{seq.fragment_id, labels_of(seq), out.hidden};
  }
  static AttentionTensor to_attention(const TokenSequence& seq, EncoderOutput out) {
    return AttentionTensor{seq.fragment_id, labels_of(seq), std::move(out.attention)};
  }
};

// Fills empty model/tokenizer paths from SIMLENS_MODEL_DIR
// (model.safetensors and tokenizer.json inside that directory).
inline BackendConfig resolve_model_paths(BackendConfig cfg) {
  if (cfg.kind != BackendKind::model) return cfg;
  const char* dir = std::getenv("SIMLENS_MODEL_DIR");
  if (dir != nullptr && *dir != '\0') {
    const std::filesystem::path base(dir);
    if (cfg.model_path.empty()) cfg.model_path = base / "model.safetensors";
    if (cfg.tokenizer_path.empty()) cfg.tokenizer_path = base / "tokenizer.json";
  }
  return cfg;
}

inline std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  if (config.kind == BackendKind::stub) return std::make_unique<StubBackend>(config);
  const BackendConfig cfg = resolve_model_paths(config);
  if (cfg.model_path.empty() || !std::filesystem::exists(cfg.model_path)) {
    throw ModelLoadError("model backend needs an existing model path (got '" +
                         cfg.model_path.string() + "'; set --model or SIMLENS_MODEL_DIR)");
  }
  if (cfg.tokenizer_path.empty() || !std::filesystem::exists(cfg.tokenizer_path)) {
    throw TokenizerLoadError("model backend needs an existing tokenizer path (got '" +
                             cfg.tokenizer_path.string() +
                             "'; set --tokenizer or SIMLENS_MODEL_DIR)");
  }
  return std::make_unique<ModelBackend>(cfg.model_path, cfg.tokenizer_path);
}

// One-shot conveniences. Each call builds a backend, which for the model
// kind means loading weights; hold a Backend for repeated use.
inline TokenSequence tokenize(const CodeFragment& fragment, const BackendConfig& config) {
  return make_backend(config)->tokenize(fragment);
}
inline EmbeddingMatrix embed(const TokenSequence& seq, const BackendConfig& config) {
  return make_backend(config)->embed(seq);
}
inline AttentionTensor attentions(const TokenSequence& seq, const BackendConfig& config) {
  return make_backend(config)->attentions(seq);
}

// Drop rows belonging to delimiter tokens.
inline EmbeddingMatrix strip_special(const EmbeddingMatrix& e, const TokenSequence& seq) {
  if (e.rows() != seq.size()) throw DimensionMismatch("strip_special: row count != token count");
  EmbeddingMatrix out{e.fragment_id, {}, Matrix(seq.code_token_count(), e.dim())};
  std::size_t r = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq.tokens[i].is_special) continue;
    std::copy(e.values.row(i).begin(), e.values.row(i).end(), out.values.row(r).begin());
    out.labels.push_back(e.labels.empty() ? seq.tokens[i].surface : e.labels[i]);
    ++r;
  }
  return out;
}

// Drop rows and columns of delimiter tokens, then renormalise each row so
// the result is row-stochastic again over code tokens only.
inline AttentionTensor strip_special(const AttentionTensor& a, const TokenSequence& seq) {
  if (a.size() != seq.size()) throw DimensionMismatch("strip_special: attention size != token count");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < seq.size(); ++i)
    if (!seq.tokens[i].is_special) keep.push_back(i);
  AttentionTensor out{a.fragment_id, {}, {}};
  for (std::size_t i : keep) out.labels.push_back(a.labels.empty() ? seq.tokens[i].surface : a.labels[i]);
  for (const Matrix& head : a.heads) {
    Matrix m(keep.size(), keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < keep.size(); ++c) {
        m(r, c) = head(keep[r], keep[c]);
        sum += m(r, c);
      }
      if (sum > 0.0) {
        for (std::size_t c = 0; c < keep.size(); ++c) m(r, c) /= sum;
      } else {
        for (std::size_t c = 0; c < keep.size(); ++c) m(r, c) = 1.0 / static_cast<double>(keep.size());
      }
    }
    out.heads.push_back(std::move(m));
  }
  return out;
}

inline EncodedFragment strip_special(const EncodedFragment& f) {
  EncodedFragment out{f.fragment, f.tokens, strip_special(f.embeddings, f.tokens),
                      strip_special(f.attention, f.tokens)};
  std::erase_if(out.tokens.tokens, [](const Token& t) { return t.is_special; });
  return out;
}

}  // namespace simlens
