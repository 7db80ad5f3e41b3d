#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "simlens/embedder/types.hpp"
#include "simlens/embedder/unicode.hpp"

namespace simlens {

/// Tokenizer driven by a single-file `tokenizer.json` definition, the format
/// written by HuggingFace `tokenizers`. Two model families are supported:
///
///  * byte-level BPE (GPT-2 / RoBERTa / CodeBERT / GraphCodeBERT), and
///  * WordPiece with the BERT normalizer and pre-tokenizer.
///
/// Offsets are byte offsets into the source. Added tokens that appear
/// literally in the input are not special-cased; code fragments never
/// contain them.
class SubwordTokenizer {
public:
  enum class Family { byte_level_bpe, wordpiece };

  static SubwordTokenizer from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TokenizerLoadError("cannot open tokenizer definition: " + path.string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw TokenizerLoadError("malformed tokenizer definition " + path.string() + ": " + e.what());
    }
    return from_json(doc);
  }

  static SubwordTokenizer from_json(const nlohmann::json& doc) {
    try {
      return parse(doc);
    } catch (const nlohmann::json::exception& e) {
      throw TokenizerLoadError(std::string("malformed tokenizer definition: ") + e.what());
    }
  }

  Family family() const noexcept { return family_; }
  std::size_t vocab_size() const noexcept { return id_to_piece_.size(); }

  std::optional<std::int64_t> piece_id(std::string_view piece) const {
    auto it = vocab_.find(std::string(piece));
    if (it == vocab_.end()) return std::nullopt;
    return it->second;
  }

  TokenSequence tokenize(const CodeFragment& fragment) const {
    validate(fragment);
    TokenSequence seq{fragment.id, {}};
    if (cls_) seq.tokens.push_back(Token{cls_->second, cls_->first, {0, 0}, true});
    if (family_ == Family::byte_level_bpe)
      encode_bpe(fragment.source, seq.tokens);
    else
      encode_wordpiece(fragment.source, seq.tokens);
    if (sep_) seq.tokens.push_back(Token{sep_->second, sep_->first, {0, 0}, true});
    if (seq.tokens.size() > kMaxSequenceLength) {
      throw SequenceTooLong("fragment '" + fragment.id + "' has " +
                            std::to_string(seq.tokens.size()) + " tokens (limit " +
                            std::to_string(kMaxSequenceLength) + ")");
    }
    return seq;
  }

private:
  using SpecialToken = std::pair<std::string, std::int64_t>;

  Family family_ = Family::byte_level_bpe;
  std::unordered_map<std::string, std::int64_t> vocab_;
  std::vector<std::string> id_to_piece_;
  std::unordered_map<std::string, std::size_t> merge_rank_;
  std::optional<std::string> unk_;
  std::optional<SpecialToken> cls_;
  std::optional<SpecialToken> sep_;
  bool add_prefix_space_ = false;
  bool trim_offsets_ = false;
  bool lowercase_ = false;
  bool strip_accents_ = false;
  bool clean_text_ = false;
  bool split_cjk_ = false;
  std::string continuing_prefix_ = "##";
  std::size_t max_chars_per_word_ = 100;
  std::array<std::string, 256> byte_symbol_{};

  // -- loading -------------------------------------------------------------

  static const nlohmann::json* find_component(const nlohmann::json& node, std::string_view type) {
    if (node.is_null()) return nullptr;
    if (node.value("type", "") == type) return &node;
    for (const char* key : {"pretokenizers", "processors", "normalizers"}) {
      if (node.contains(key)) {
        for (const auto& child : node.at(key))
          if (const auto* hit = find_component(child, type)) return hit;
      }
    }
    return nullptr;
  }

  static SpecialToken special_from_pair(const nlohmann::json& pair) {
    return {pair.at(0).get<std::string>(), pair.at(1).get<std::int64_t>()};
  }

  static SubwordTokenizer parse(const nlohmann::json& doc) {
    SubwordTokenizer tok;
    const auto& model = doc.at("model");
    const std::string type = model.value("type", "");
    if (type == "BPE") {
      tok.family_ = Family::byte_level_bpe;
    } else if (type == "WordPiece") {
      tok.family_ = Family::wordpiece;
    } else {
      throw TokenizerLoadError("unsupported tokenizer model type '" + type + "'");
    }

    for (const auto& [piece, id] : model.at("vocab").items()) {
      tok.vocab_.emplace(piece, id.get<std::int64_t>());
    }
    if (tok.vocab_.empty()) throw TokenizerLoadError("tokenizer vocabulary is empty");
    std::int64_t max_id = 0;
    for (const auto& [piece, id] : tok.vocab_) {
      if (id < 0) throw TokenizerLoadError("negative token id for '" + piece + "'");
      max_id = std::max(max_id, id);
    }
    tok.id_to_piece_.resize(static_cast<std::size_t>(max_id) + 1);
    for (const auto& [piece, id] : tok.vocab_) tok.id_to_piece_[static_cast<std::size_t>(id)] = piece;

    if (model.contains("unk_token") && model.at("unk_token").is_string()) {
      tok.unk_ = model.at("unk_token").get<std::string>();
    }

    const nlohmann::json null_json;
    const auto& pre = doc.contains("pre_tokenizer") ? doc.at("pre_tokenizer") : null_json;
    const auto& post = doc.contains("post_processor") ? doc.at("post_processor") : null_json;
    const auto& norm = doc.contains("normalizer") ? doc.at("normalizer") : null_json;

    if (tok.family_ == Family::byte_level_bpe) {
      const auto* byte_level = find_component(pre, "ByteLevel");
      if (byte_level == nullptr) {
        throw TokenizerLoadError("BPE tokenizers must use the ByteLevel pre-tokenizer");
      }
      tok.add_prefix_space_ = byte_level->value("add_prefix_space", false);
      tok.init_byte_symbols();
      std::size_t rank = 0;
      for (const auto& m : model.at("merges")) {
        std::string a, b;
        if (m.is_string()) {
          const auto s = m.get<std::string>();
          const auto sp = s.find(' ');
          if (sp == std::string::npos) throw TokenizerLoadError("malformed merge rule '" + s + "'");
          a = s.substr(0, sp);
          b = s.substr(sp + 1);
        } else {
          a = m.at(0).get<std::string>();
          b = m.at(1).get<std::string>();
        }
        tok.merge_rank_.emplace(a + ' ' + b, rank++);
      }
    } else {
      tok.continuing_prefix_ = model.value("continuing_subword_prefix", std::string("##"));
      tok.max_chars_per_word_ = model.value("max_input_chars_per_word", std::size_t{100});
      if (const auto* bert = find_component(norm, "BertNormalizer")) {
        tok.lowercase_ = bert->value("lowercase", true);
        // A null strip_accents follows lowercase.
        const auto& strip = bert->contains("strip_accents") ? bert->at("strip_accents") : null_json;
        tok.strip_accents_ = strip.is_boolean() ? strip.get<bool>() : tok.lowercase_;
        tok.clean_text_ = bert->value("clean_text", true);
        tok.split_cjk_ = bert->value("handle_chinese_chars", true);
      } else {
        tok.lowercase_ = find_component(norm, "Lowercase") != nullptr;
        tok.strip_accents_ = find_component(norm, "StripAccents") != nullptr;
      }
    }

    if (const auto* p = find_component(post, "RobertaProcessing")) {
      tok.cls_ = special_from_pair(p->at("cls"));
      tok.sep_ = special_from_pair(p->at("sep"));
      tok.trim_offsets_ = p->value("trim_offsets", true);
    } else if (const auto* p = find_component(post, "BertProcessing")) {
      tok.cls_ = special_from_pair(p->at("cls"));
      tok.sep_ = special_from_pair(p->at("sep"));
    } else if (const auto* p = find_component(post, "TemplateProcessing")) {
      tok.parse_template(*p);
    }
    if (const auto* p = find_component(post, "ByteLevel")) {
      tok.trim_offsets_ = p->value("trim_offsets", true);
    }
    return tok;
  }

  // Single-sequence template of the form [special?] $A [special?].
  void parse_template(const nlohmann::json& p) {
    const auto& specials = p.at("special_tokens");
    auto lookup = [&](const std::string& name) -> SpecialToken {
      return {name, specials.at(name).at("ids").at(0).get<std::int64_t>()};
    };
    bool seen_sequence = false;
    for (const auto& item : p.at("single")) {
      if (item.contains("Sequence")) {
        seen_sequence = true;
      } else if (item.contains("SpecialToken")) {
        const auto name = item.at("SpecialToken").at("id").get<std::string>();
        if (seen_sequence)
          sep_ = lookup(name);
        else
          cls_ = lookup(name);
      }
    }
  }

  // GPT-2 reversible byte -> printable code point table, stored as UTF-8.
  void init_byte_symbols() {
    std::array<bool, 256> direct{};
    for (int b = '!'; b <= '~'; ++b) direct[static_cast<std::size_t>(b)] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) direct[static_cast<std::size_t>(b)] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) direct[static_cast<std::size_t>(b)] = true;
    std::uint32_t next = 256;
    for (std::size_t b = 0; b < 256; ++b) {
      const std::uint32_t cp = direct[b] ? static_cast<std::uint32_t>(b) : next++;
      byte_symbol_[b] = utf8(cp);
    }
  }

  static std::string utf8(std::uint32_t cp) {
    std::string s;
    if (cp < 0x80) {
      s.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      s.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      s.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return s;
  }

  // -- byte-level BPE ------------------------------------------------------

  enum class CharClass { letter, digit, space, other };

  static CharClass classify(unsigned char c) noexcept {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80) return CharClass::letter;
    if (c >= '0' && c <= '9') return CharClass::digit;
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v')
      return CharClass::space;
    return CharClass::other;
  }

  // GPT-2 pre-tokenization pattern, evaluated by hand over bytes:
  //   's|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+
  // Non-ASCII bytes count as letters.
  static std::vector<CharSpan> pre_tokenize(std::string_view s) {
    std::vector<CharSpan> out;
    std::size_t i = 0;
    const std::size_t n = s.size();
    auto cls = [&](std::size_t k) { return classify(static_cast<unsigned char>(s[k])); };
    auto run = [&](std::size_t k, CharClass c) {
      while (k < n && cls(k) == c) ++k;
      return k;
    };
    while (i < n) {
      if (s[i] == '\'') {
        std::size_t len = 0;
        for (std::string_view suf : {"ll", "re", "ve", "s", "t", "m", "d"}) {
          if (s.substr(i + 1, suf.size()) == suf) {
            len = 1 + suf.size();
            break;
          }
        }
        if (len != 0) {
          out.push_back({i, i + len});
          i += len;
          continue;
        }
      }
      const std::size_t start = i;
      std::size_t body = i;
      if (s[i] == ' ' && i + 1 < n && cls(i + 1) != CharClass::space) body = i + 1;
      const CharClass c = cls(body);
      if (c == CharClass::letter || c == CharClass::digit) {
        i = run(body, c);
      } else if (c == CharClass::other) {
        i = run(body, CharClass::other);
      } else {
        // whitespace run; leave the final space for the next token if a
        // non-space follows and the run is longer than one byte
        std::size_t end = run(i, CharClass::space);
        if (end < n && end - i > 1) --end;
        i = end;
      }
      out.push_back({start, i});
    }
    return out;
  }

  struct Symbol {
    std::string text;
    std::size_t begin;
    std::size_t end;
  };

  void encode_bpe(const std::string& source, std::vector<Token>& out) const {
    std::string text = source;
    std::size_t shift = 0;
    if (add_prefix_space_ && !text.empty() && text.front() != ' ') {
      text.insert(text.begin(), ' ');
      shift = 1;
    }
    auto to_source = [&](std::size_t pos) { return pos >= shift ? pos - shift : 0; };
    const std::size_t first_code_token = out.size();

    for (const CharSpan& word : pre_tokenize(text)) {
      std::vector<Symbol> syms;
      for (std::size_t k = word.begin; k < word.end; ++k) {
        syms.push_back({byte_symbol_[static_cast<unsigned char>(text[k])], k, k + 1});
      }
      merge_symbols(syms);
      for (const auto& sym : syms) {
        auto it = vocab_.find(sym.text);
        std::int64_t id = 0;
        if (it != vocab_.end()) {
          id = it->second;
        } else if (unk_ && vocab_.count(*unk_) != 0) {
          id = vocab_.at(*unk_);
        } else {
          throw InvalidArgument("BPE piece '" + sym.text + "' missing from vocabulary");
        }
        CharSpan span{to_source(sym.begin), to_source(sym.end)};
        if (trim_offsets_) trim_span(sym.text, span, out.size() == first_code_token || span.begin == 0);
        snap_to_characters(source, span);
        out.push_back(Token{id, sym.text, span, false});
      }
    }
  }

  void merge_symbols(std::vector<Symbol>& syms) const {
    while (syms.size() > 1) {
      std::size_t best_rank = std::numeric_limits<std::size_t>::max();
      std::string best_a, best_b;
      for (std::size_t k = 0; k + 1 < syms.size(); ++k) {
        auto it = merge_rank_.find(syms[k].text + ' ' + syms[k + 1].text);
        if (it != merge_rank_.end() && it->second < best_rank) {
          best_rank = it->second;
          best_a = syms[k].text;
          best_b = syms[k + 1].text;
        }
      }
      if (best_rank == std::numeric_limits<std::size_t>::max()) break;
      std::vector<Symbol> merged;
      merged.reserve(syms.size());
      for (std::size_t k = 0; k < syms.size(); ++k) {
        if (k + 1 < syms.size() && syms[k].text == best_a && syms[k + 1].text == best_b) {
          merged.push_back({best_a + best_b, syms[k].begin, syms[k + 1].end});
          ++k;
        } else {
          merged.push_back(std::move(syms[k]));
        }
      }
      syms = std::move(merged);
    }
  }

  // A piece holding part of a multi-byte character reports the whole
  // character, so spans always cut the source on character boundaries.
  static void snap_to_characters(std::string_view source, CharSpan& span) {
    auto cont = [&](std::size_t k) {
      return k < source.size() && unicode::is_continuation(static_cast<unsigned char>(source[k]));
    };
    while (span.begin > 0 && cont(span.begin)) --span.begin;
    while (span.end > span.begin && cont(span.end)) ++span.end;
  }

  // Drop the bytes of leading/trailing mapped spaces from the span.
  void trim_span(const std::string& piece, CharSpan& span, bool is_first) const {
    const std::string& space = byte_symbol_[static_cast<unsigned char>(' ')];
    std::size_t leading = 0;
    for (std::size_t p = 0; piece.compare(p, space.size(), space) == 0; p += space.size()) ++leading;
    std::size_t trailing = 0;
    for (std::size_t p = piece.size(); p >= space.size() &&
                                       piece.compare(p - space.size(), space.size(), space) == 0;
         p -= space.size())
      ++trailing;
    if (leading > 0) {
      if (is_first && add_prefix_space_ && leading == 1) leading = 0;
      span.begin = std::min(span.begin + leading, span.end);
    }
    if (trailing > 0 && span.end >= trailing) span.end = std::max(span.end - trailing, span.begin);
  }

  // -- WordPiece -----------------------------------------------------------

  // One character after normalization, with the source bytes it came from.
  struct NormChar {
    char32_t value;
    CharSpan source;
  };

  // BERT normalization (control removal, CJK isolation, accent stripping,
  // lowercasing) followed by the split on whitespace and punctuation.
  std::vector<std::vector<NormChar>> normalized_words(const std::string& source) const {
    std::vector<NormChar> chars;
    for (const auto& cp : unicode::decode(source)) {
      char32_t c = cp.value;
      if (clean_text_) {
        if (c == 0 || c == unicode::kReplacement || unicode::is_control(c)) continue;
        if (unicode::is_whitespace(c)) c = ' ';
      }
      if (split_cjk_ && unicode::is_cjk(c)) {
        chars.push_back({' ', cp.bytes});
        chars.push_back({c, cp.bytes});
        chars.push_back({' ', cp.bytes});
        continue;
      }
      if (strip_accents_) {
        if (unicode::is_combining_mark(c)) continue;
        c = unicode::strip_accent(c);
      }
      if (lowercase_) c = unicode::to_lower(c);
      chars.push_back({c, cp.bytes});
    }

    std::vector<std::vector<NormChar>> words;
    std::vector<NormChar> word;
    auto flush = [&] {
      if (!word.empty()) words.push_back(std::move(word));
      word.clear();
    };
    for (const auto& ch : chars) {
      if (unicode::is_whitespace(ch.value)) {
        flush();
      } else if (unicode::is_punctuation(ch.value)) {
        flush();
        words.push_back({ch});
      } else {
        word.push_back(ch);
      }
    }
    flush();
    return words;
  }

  void encode_wordpiece(const std::string& source, std::vector<Token>& out) const {
    for (const auto& word : normalized_words(source)) {
      const CharSpan whole{word.front().source.begin, word.back().source.end};
      std::vector<Token> pieces;
      bool bad = word.size() > max_chars_per_word_;
      std::size_t start = 0;
      while (!bad && start < word.size()) {
        std::size_t end = word.size();
        std::optional<Token> found;
        while (start < end) {
          std::string candidate = start > 0 ? continuing_prefix_ : std::string();
          for (std::size_t k = start; k < end; ++k) unicode::append_utf8(candidate, word[k].value);
          if (auto it = vocab_.find(candidate); it != vocab_.end()) {
            found = Token{it->second, candidate, {word[start].source.begin, word[end - 1].source.end}, false};
            break;
          }
          --end;
        }
        if (!found) {
          bad = true;
          break;
        }
        pieces.push_back(*found);
        start = end;
      }
      if (bad) {
        if (!unk_ || vocab_.count(*unk_) == 0) {
          throw InvalidArgument("a word at byte " + std::to_string(whole.begin) + " is not representable");
        }
        out.push_back(Token{vocab_.at(*unk_), *unk_, whole, false});
      } else {
        out.insert(out.end(), pieces.begin(), pieces.end());
      }
    }
  }
};

}  // namespace simlens
