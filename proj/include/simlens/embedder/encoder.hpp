#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "simlens/embedder/safetensors.hpp"
#include "simlens/matrix.hpp"

namespace simlens {

struct EncoderConfig {
  std::string model_type = "roberta";
  std::size_t hidden = 0;
  std::size_t layers = 0;
  std::size_t heads = 0;
  std::size_t intermediate = 0;
  std::size_t vocab = 0;
  std::size_t max_positions = 0;
  std::size_t position_offset = 0;  // RoBERTa positions start at pad_token_id + 1
  double layer_norm_eps = 1e-12;
  std::string hidden_act = "gelu";
};

struct EncoderOutput {
  Matrix hidden;                 // last-layer hidden states, n x d
  std::vector<Matrix> attention; // last-layer attention probabilities, H x (n x n)
};

// BERT-family encoder (BERT, RoBERTa, CodeBERT, GraphCodeBERT) evaluated
// natively from HuggingFace safetensors weights. Inference only; forward()
// is const and safe to call concurrently.
class TransformerEncoder {
public:
  // `model_path` is either a .safetensors file with config.json beside it,
  // or a directory holding model.safetensors and config.json.
  static TransformerEncoder load(const std::filesystem::path& model_path) {
    namespace fs = std::filesystem;
    fs::path weights = model_path;
    if (fs::is_directory(model_path)) weights = model_path / "model.safetensors";
    if (!fs::exists(weights)) throw ModelLoadError("model weights not found: " + weights.string());
    const fs::path config_path = weights.parent_path() / "config.json";
    if (!fs::exists(config_path)) {
      throw ModelLoadError("model config not found: " + config_path.string());
    }

    TransformerEncoder enc;
    enc.config_ = read_config(config_path);
    const auto file = SafetensorsFile::load(weights);
    enc.load_weights(file);
    return enc;
  }

  const EncoderConfig& config() const noexcept { return config_; }

  EncoderOutput forward(std::span<const std::int64_t> ids) const {
    const std::size_t n = ids.size();
    const std::size_t d = config_.hidden;
    if (n == 0) throw EmptyInput("encoder: empty token sequence");
    if (n + config_.position_offset > config_.max_positions) {
      throw SequenceTooLong("encoder: " + std::to_string(n) + " tokens exceed the " +
                            std::to_string(config_.max_positions) + " position embeddings");
    }

    Activations x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= config_.vocab) {
        throw DimensionMismatch("token id " + std::to_string(ids[i]) +
                                " outside the model vocabulary of " +
                                std::to_string(config_.vocab));
      }
      const float* w = word_embeddings_.data() + static_cast<std::size_t>(ids[i]) * d;
      const float* p = position_embeddings_.data() + (i + config_.position_offset) * d;
      const float* t = token_type_embeddings_.data();
      float* out = x.row(i);
      for (std::size_t c = 0; c < d; ++c) out[c] = w[c] + p[c] + t[c];
    }
    layer_norm(x, embedding_norm_);

    EncoderOutput result;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const bool last = l + 1 == layers_.size();
      x = run_layer(layers_[l], x, last ? &result.attention : nullptr);
    }

    result.hidden = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < d; ++c) result.hidden(i, c) = x.row(i)[c];
    if (!all_finite(result.hidden)) {
      throw DimensionMismatch("encoder produced non-finite hidden states");
    }
    return result;
  }

private:
  struct Linear {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<float> weight;  // out x in, row-major
    std::vector<float> bias;
  };
  struct Norm {
    std::vector<float> gamma;
    std::vector<float> beta;
  };
  struct Layer {
    Linear query, key, value, attn_out;
    Norm attn_norm;
    Linear ffn_in, ffn_out;
    Norm ffn_norm;
  };

  struct Activations {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;
    Activations() = default;
    Activations(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}
    float* row(std::size_t i) { return data.data() + i * cols; }
    const float* row(std::size_t i) const { return data.data() + i * cols; }
  };

  EncoderConfig config_;
  std::vector<float> word_embeddings_;
  std::vector<float> position_embeddings_;
  std::vector<float> token_type_embeddings_;
  Norm embedding_norm_;
  std::vector<Layer> layers_;

  static EncoderConfig read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    EncoderConfig cfg;
    try {
      const auto doc = nlohmann::json::parse(in);
      cfg.model_type = doc.value("model_type", std::string("bert"));
      cfg.hidden = doc.at("hidden_size").get<std::size_t>();
      cfg.layers = doc.at("num_hidden_layers").get<std::size_t>();
      cfg.heads = doc.at("num_attention_heads").get<std::size_t>();
      cfg.intermediate = doc.at("intermediate_size").get<std::size_t>();
      cfg.layer_norm_eps = doc.value("layer_norm_eps", 1e-12);
      cfg.hidden_act = doc.value("hidden_act", std::string("gelu"));
      if (cfg.model_type == "roberta") {
        cfg.position_offset = doc.value("pad_token_id", std::size_t{1}) + 1;
      }
    } catch (const nlohmann::json::exception& e) {
      throw ModelLoadError("malformed model config " + path.string() + ": " + e.what());
    }
    if (cfg.hidden == 0 || cfg.heads == 0 || cfg.hidden % cfg.heads != 0) {
      throw ModelLoadError("model config: hidden_size must be a positive multiple of num_attention_heads");
    }
    if (cfg.hidden_act != "gelu" && cfg.hidden_act != "gelu_new") {
      throw ModelLoadError("model config: unsupported activation '" + cfg.hidden_act + "'");
    }
    return cfg;
  }

  static std::string find_prefix(const SafetensorsFile& f) {
    const std::string anchor = "embeddings.word_embeddings.weight";
    for (const auto& [name, e] : f.entries()) {
      if (name.size() >= anchor.size() &&
          name.compare(name.size() - anchor.size(), anchor.size(), anchor) == 0) {
        return name.substr(0, name.size() - anchor.size());
      }
    }
    throw ModelLoadError("model weights contain no word embedding table");
  }

  void check_shape(const SafetensorsFile& f, const std::string& name,
                   std::vector<std::size_t> want) const {
    const auto& have = f.entry(name).shape;
    if (have != want) {
      throw DimensionMismatch("tensor '" + name + "' does not match the declared model dimensions");
    }
  }

  Linear read_linear(const SafetensorsFile& f, const std::string& base, std::size_t in,
                     std::size_t out) const {
    check_shape(f, base + ".weight", {out, in});
    check_shape(f, base + ".bias", {out});
    return Linear{in, out, f.read(base + ".weight"), f.read(base + ".bias")};
  }

  Norm read_norm(const SafetensorsFile& f, const std::string& base) const {
    const std::string w = f.contains(base + ".weight") ? base + ".weight" : base + ".gamma";
    const std::string b = f.contains(base + ".bias") ? base + ".bias" : base + ".beta";
    check_shape(f, w, {config_.hidden});
    check_shape(f, b, {config_.hidden});
    return Norm{f.read(w), f.read(b)};
  }

  void load_weights(const SafetensorsFile& f) {
    const std::string p = find_prefix(f);
    const std::size_t d = config_.hidden;
    const auto& word = f.entry(p + "embeddings.word_embeddings.weight").shape;
    if (word.size() != 2 || word[1] != d) {
      throw DimensionMismatch("word embedding width does not match hidden_size " + std::to_string(d));
    }
    config_.vocab = word[0];
    const auto& pos = f.entry(p + "embeddings.position_embeddings.weight").shape;
    if (pos.size() != 2 || pos[1] != d) {
      throw DimensionMismatch("position embedding width does not match hidden_size");
    }
    config_.max_positions = pos[0];
    word_embeddings_ = f.read(p + "embeddings.word_embeddings.weight");
    position_embeddings_ = f.read(p + "embeddings.position_embeddings.weight");
    if (f.contains(p + "embeddings.token_type_embeddings.weight")) {
      token_type_embeddings_ = f.read(p + "embeddings.token_type_embeddings.weight");
    } else {
      token_type_embeddings_.assign(d, 0.0f);
    }
    embedding_norm_ = read_norm(f, p + "embeddings.LayerNorm");

    for (std::size_t l = 0; l < config_.layers; ++l) {
      const std::string b = p + "encoder.layer." + std::to_string(l) + ".";
      Layer layer;
      layer.query = read_linear(f, b + "attention.self.query", d, d);
      layer.key = read_linear(f, b + "attention.self.key", d, d);
      layer.value = read_linear(f, b + "attention.self.value", d, d);
      layer.attn_out = read_linear(f, b + "attention.output.dense", d, d);
      layer.attn_norm = read_norm(f, b + "attention.output.LayerNorm");
      layer.ffn_in = read_linear(f, b + "intermediate.dense", d, config_.intermediate);
      layer.ffn_out = read_linear(f, b + "output.dense", config_.intermediate, d);
      layer.ffn_norm = read_norm(f, b + "output.LayerNorm");
      layers_.push_back(std::move(layer));
    }
  }

  static Activations apply(const Linear& lin, const Activations& x) {
    Activations y(x.rows, lin.out);
    for (std::size_t i = 0; i < x.rows; ++i) {
      const float* xi = x.row(i);
      float* yi = y.row(i);
      for (std::size_t o = 0; o < lin.out; ++o) {
        const float* w = lin.weight.data() + o * lin.in;
        float s = 0.0f;
        for (std::size_t k = 0; k < lin.in; ++k) s += xi[k] * w[k];
        yi[o] = s + lin.bias[o];
      }
    }
    return y;
  }

  void layer_norm(Activations& x, const Norm& norm) const {
    for (std::size_t i = 0; i < x.rows; ++i) {
      float* r = x.row(i);
      double mean = 0.0;
      for (std::size_t c = 0; c < x.cols; ++c) mean += r[c];
      mean /= static_cast<double>(x.cols);
      double var = 0.0;
      for (std::size_t c = 0; c < x.cols; ++c) var += (r[c] - mean) * (r[c] - mean);
      var /= static_cast<double>(x.cols);
      const double inv = 1.0 / std::sqrt(var + config_.layer_norm_eps);
      for (std::size_t c = 0; c < x.cols; ++c) {
        r[c] = static_cast<float>((r[c] - mean) * inv) * norm.gamma[c] + norm.beta[c];
      }
    }
  }

  float activation(float v) const {
    if (config_.hidden_act == "gelu_new") {
      const float k = 0.7978845608028654f;  // sqrt(2 / pi)
      return 0.5f * v * (1.0f + std::tanh(k * (v + 0.044715f * v * v * v)));
    }
    return 0.5f * v * (1.0f + std::erf(v * 0.7071067811865476f));
  }

  Activations run_layer(const Layer& layer, const Activations& x,
                        std::vector<Matrix>* attention_out) const {
    const std::size_t n = x.rows;
    const std::size_t d = config_.hidden;
    const std::size_t heads = config_.heads;
    const std::size_t dk = d / heads;
    const Activations q = apply(layer.query, x);
    const Activations k = apply(layer.key, x);
    const Activations v = apply(layer.value, x);
    const float scale = 1.0f / std::sqrt(static_cast<float>(dk));

    Activations context(n, d);
    std::vector<float> probs(n);
    for (std::size_t h = 0; h < heads; ++h) {
      Matrix head_probs;
      if (attention_out != nullptr) head_probs = Matrix(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        const float* qi = q.row(i) + h * dk;
        float mx = -INFINITY;
        for (std::size_t j = 0; j < n; ++j) {
          const float* kj = k.row(j) + h * dk;
          float s = 0.0f;
          for (std::size_t c = 0; c < dk; ++c) s += qi[c] * kj[c];
          probs[j] = s * scale;
          mx = std::max(mx, probs[j]);
        }
        float sum = 0.0f;
        for (std::size_t j = 0; j < n; ++j) {
          probs[j] = std::exp(probs[j] - mx);
          sum += probs[j];
        }
        float* ci = context.row(i) + h * dk;
        for (std::size_t j = 0; j < n; ++j) {
          probs[j] /= sum;
          const float* vj = v.row(j) + h * dk;
          for (std::size_t c = 0; c < dk; ++c) ci[c] += probs[j] * vj[c];
        }
        if (attention_out != nullptr) {
          // Renormalise in double so rows are stochastic to double precision.
          double total = 0.0;
          for (std::size_t j = 0; j < n; ++j) total += probs[j];
          for (std::size_t j = 0; j < n; ++j) head_probs(i, j) = probs[j] / total;
        }
      }
      if (attention_out != nullptr) attention_out->push_back(std::move(head_probs));
    }

    Activations attn = apply(layer.attn_out, context);
    for (std::size_t i = 0; i < attn.data.size(); ++i) attn.data[i] += x.data[i];
    layer_norm(attn, layer.attn_norm);

    Activations mid = apply(layer.ffn_in, attn);
    for (float& val : mid.data) val = activation(val);
    Activations out = apply(layer.ffn_out, mid);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += attn.data[i];
    layer_norm(out, layer.ffn_norm);
    return out;
  }
};

}  // namespace simlens
