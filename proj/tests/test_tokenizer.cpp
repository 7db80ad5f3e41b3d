#include <fstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "simlens/embedder/subword_tokenizer.hpp"

using simlens::SubwordTokenizer;

namespace {

const nlohmann::json& expected() {
  static const nlohmann::json doc = [] {
    std::ifstream in(std::string(SIMLENS_TEST_DATA) + "/tokenizer_expected.json");
    return nlohmann::json::parse(in);
  }();
  return doc;
}

void check_family(const std::string& kind) {
  const auto tok = SubwordTokenizer::from_file(std::string(SIMLENS_TEST_DATA) + "/" + kind + "_tokenizer.json");
  const auto& ref = expected().at(kind);
  EXPECT_EQ(tok.vocab_size(), ref.at("vocab_size").get<std::size_t>());
  for (const auto& [name, text] : ref.at("sources").items()) {
    SCOPED_TRACE(kind + ":" + name);
    const auto seq = tok.tokenize({name, "python", text.get<std::string>()});
    const auto& want = ref.at("cases").at(name);
    ASSERT_EQ(seq.size(), want.at("ids").size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
      SCOPED_TRACE("token " + std::to_string(i) + " '" + want.at("tokens").at(i).get<std::string>() + "'");
      EXPECT_EQ(seq.tokens[i].token_id, want.at("ids").at(i).get<std::int64_t>());
      EXPECT_EQ(seq.tokens[i].is_special, want.at("special").at(i).get<bool>());
      if (!seq.tokens[i].is_special) {
        EXPECT_EQ(seq.tokens[i].span.begin, want.at("offsets").at(i).at(0).get<std::size_t>());
        EXPECT_EQ(seq.tokens[i].span.end, want.at("offsets").at(i).at(1).get<std::size_t>());
      }
    }
  }
}

}  // namespace

TEST(SubwordTokenizer, ByteLevelBpeMatchesReference) { check_family("bpe"); }

TEST(SubwordTokenizer, WordPieceMatchesReference) { check_family("wordpiece"); }

TEST(SubwordTokenizer, SpecialsAreFlaggedAndDelimitTheSequence) {
  const auto tok = SubwordTokenizer::from_file(std::string(SIMLENS_TEST_DATA) + "/bpe_tokenizer.json");
  const auto seq = tok.tokenize({"f", "python", "x = 1"});
  ASSERT_GE(seq.size(), 3u);
  EXPECT_TRUE(seq.tokens.front().is_special);
  EXPECT_TRUE(seq.tokens.back().is_special);
  EXPECT_EQ(seq.code_token_count(), seq.size() - 2);
}

TEST(SubwordTokenizer, MissingFileIsTokenizerLoadError) {
  EXPECT_THROW(SubwordTokenizer::from_file("/nonexistent/tokenizer.json"), simlens::TokenizerLoadError);
}

TEST(SubwordTokenizer, MalformedDefinitionIsTokenizerLoadError) {
  EXPECT_THROW(SubwordTokenizer::from_json(nlohmann::json::object()), simlens::TokenizerLoadError);
  EXPECT_THROW(SubwordTokenizer::from_json({{"model", {{"type", "Unigram"}}}}), simlens::TokenizerLoadError);
}

TEST(SubwordTokenizer, BlankSourceIsEmptyInput) {
  const auto tok = SubwordTokenizer::from_file(std::string(SIMLENS_TEST_DATA) + "/wordpiece_tokenizer.json");
  EXPECT_THROW(tok.tokenize({"f", "python", "  \n\t"}), simlens::EmptyInput);
}

TEST(SubwordTokenizer, OverlongInputIsRejected) {
  const auto tok = SubwordTokenizer::from_file(std::string(SIMLENS_TEST_DATA) + "/wordpiece_tokenizer.json");
  std::string src;
  for (int i = 0; i < 600; ++i) src += "x ";
  EXPECT_THROW(tok.tokenize({"f", "python", src}), simlens::SequenceTooLong);
}
