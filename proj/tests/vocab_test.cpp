#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "sembridge/vocab.hpp"

using namespace sembridge;
namespace fs = std::filesystem;

namespace {

NormalizationPolicy case_fold_only() {
  NormalizationPolicy p;
  p.case_fold = true;
  return p;
}

fs::path write_lines(const std::string& name, const std::string& body) {
  auto dir = fs::temp_directory_path() / "sembridge_vocab_test";
  fs::create_directories(dir);
  std::ofstream(dir / name) << body;
  return dir / name;
}

}  // namespace

TEST(NormalizeToken, PolicyExamples) {
  EXPECT_EQ(normalize_token("HOME", case_fold_only()), "home");

  NormalizationPolicy markers;
  markers.strip_subword_markers = {"##"};
  EXPECT_EQ(normalize_token("##ing", markers), "ing");

  NormalizationPolicy trim;
  trim.trim_whitespace = true;
  EXPECT_EQ(normalize_token(" 2024 ", trim), "2024");
  EXPECT_EQ(normalize_token("　x ", trim), "x");
}

TEST(NormalizeToken, OrderOfSteps) {
  NormalizationPolicy p;
  p.apply_unicode_nfkc = true;
  p.strip_subword_markers = {"▁", "##"};
  p.trim_whitespace = true;
  p.case_fold = true;
  // Full-width letters fold to ASCII under NFKC, then the marker goes, then case.
  EXPECT_EQ(normalize_token("▁Ｈｏｍｅ", p), "home");
  // Only the first matching marker is removed, once.
  EXPECT_EQ(normalize_token("####x", p), "##x");
  // Marker-only token normalizes to empty.
  EXPECT_EQ(normalize_token("##", p), "");
}

TEST(NormalizeToken, IdempotentWithoutMarkers) {
  NormalizationPolicy p;
  p.apply_unicode_nfkc = true;
  p.trim_whitespace = true;
  p.case_fold = true;
  for (const char* tok : {"Straße", " ＨＯＭＥ ", "Ǆemal", "ﬁne", "집", "ДОМ", "x́"}) {
    const auto once = normalize_token(tok, p);
    EXPECT_EQ(normalize_token(once, p), once) << tok;
  }
}

TEST(Overlap, WorkedExample) {
  const Vocabulary src({"home", "##ing", "2024"});
  const Vocabulary tgt({"HOME", "2024", "집"});
  const auto ov = compute_overlap(src, tgt, case_fold_only());
  EXPECT_EQ(ov.source_of(0), 0u);
  EXPECT_EQ(ov.source_of(1), 2u);
  EXPECT_EQ(ov.remaining(), std::vector<TokenId>{2});
  EXPECT_TRUE(ov.conflicts.empty());
}

TEST(Overlap, IdenticalVocabulariesGiveIdentity) {
  const Vocabulary v({"a", "b", "c", "##d"});
  const auto ov = compute_overlap(v, v, NormalizationPolicy{});
  for (TokenId t = 0; t < 4; ++t) EXPECT_EQ(ov.source_of(t), t);
  EXPECT_TRUE(ov.remaining().empty());
}

TEST(Overlap, NormalizedTieBreaksToLowestIdAndLogs) {
  const Vocabulary src({"Ab", "ab"});
  const Vocabulary tgt({"AB"});
  const auto ov = compute_overlap(src, tgt, case_fold_only());
  EXPECT_EQ(ov.source_of(0), 0u);
  ASSERT_EQ(ov.conflicts.size(), 1u);
  EXPECT_EQ(ov.conflicts[0].source_ids, (std::vector<TokenId>{0, 1}));
  EXPECT_EQ(ov.conflicts[0].normalized, "ab");
}

TEST(Overlap, ExactMatchOutranksNormalized) {
  const Vocabulary src({"Home", "home"});
  const Vocabulary tgt({"home"});
  const auto ov = compute_overlap(src, tgt, case_fold_only());
  EXPECT_EQ(ov.source_of(0), 1u);
  EXPECT_TRUE(ov.conflicts.empty());
}

TEST(Overlap, EmptyNormalizedFormsNeverMatch) {
  NormalizationPolicy p;
  p.strip_subword_markers = {"##", "@@"};
  const Vocabulary src({"##", "x"});
  const Vocabulary tgt({"@@"});
  const auto ov = compute_overlap(src, tgt, p);
  EXPECT_EQ(ov.remaining(), std::vector<TokenId>{0});
}

TEST(Overlap, EmptyPolicyEqualsExactIntersectionAndPartitionsTargets) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> letter(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    auto make = [&](std::size_t n) {
      std::vector<std::string> toks;
      std::set<std::string> seen;
      while (toks.size() < n) {
        std::string s;
        for (int i = 0; i < 2; ++i) s += static_cast<char>((letter(gen) % 2 ? 'a' : 'A') + letter(gen));
        if (seen.insert(s).second) toks.push_back(s);
      }
      return Vocabulary(toks);
    };
    const auto src = make(20);
    const auto tgt = make(15);
    const auto ov = compute_overlap(src, tgt, NormalizationPolicy{});
    std::size_t mapped = 0;
    for (TokenId t = 0; t < tgt.size(); ++t) {
      const auto exact = src.find(tgt.token(t));
      EXPECT_EQ(ov.source_of(t), exact);
      mapped += exact.has_value();
    }
    EXPECT_EQ(mapped + ov.remaining().size(), tgt.size());

    const auto folded = compute_overlap(src, tgt, case_fold_only());
    EXPECT_EQ(folded.overlap_count() + folded.remaining().size(), tgt.size());
  }
}

TEST(Overlap, ReportJsonShape) {
  const Vocabulary src({"Ab", "ab"});
  const Vocabulary tgt({"AB", "zz"});
  const auto p = case_fold_only();
  const auto j = overlap_report_json(compute_overlap(src, tgt, p), p);
  EXPECT_EQ(j["remaining_count"], 1);
  EXPECT_EQ(j["pairs"].size(), 1u);
  EXPECT_EQ(j["conflicts"][0]["source_ids"], nlohmann::json::array({0, 1}));
  EXPECT_EQ(j["policy"]["case_fold"], true);
}

TEST(ScriptDistribution, Classification) {
  EXPECT_EQ(classify_token("집"), ScriptClass::hangul);
  EXPECT_EQ(classify_token("2024"), ScriptClass::etc);
  EXPECT_EQ(classify_token("##s"), ScriptClass::latin);
  EXPECT_EQ(classify_token("[CLS]"), ScriptClass::latin);
  EXPECT_EQ(classify_token("[]!?"), ScriptClass::etc);
  EXPECT_EQ(classify_token("بيت"), ScriptClass::arabic);
  EXPECT_EQ(classify_token("家"), ScriptClass::han);
  EXPECT_EQ(classify_token("घर"), ScriptClass::devanagari);
  EXPECT_EQ(classify_token("ελλάδα"), ScriptClass::other_script);
  EXPECT_EQ(classify_token("домa"), ScriptClass::cyrillic);  // 3 Cyrillic letters vs 1 Latin
}

TEST(ScriptDistribution, CountsSumToVocabularySize) {
  const Vocabulary v({"дом", "home", "##s"});
  const auto counts = script_distribution(v);
  EXPECT_EQ(counts.at(ScriptClass::cyrillic), 1u);
  EXPECT_EQ(counts.at(ScriptClass::latin), 2u);
  std::size_t total = 0;
  for (auto [_, n] : counts) total += n;
  EXPECT_EQ(total, v.size());
}

TEST(VocabularyFile, RoundTripAndValidation) {
  const Vocabulary v({"a", "집", "\"quoted\""});
  auto dir = fs::temp_directory_path() / "sembridge_vocab_test";
  fs::create_directories(dir);
  write_vocabulary(v, dir / "v.jsonl");
  EXPECT_EQ(read_vocabulary(dir / "v.jsonl"), v);

  EXPECT_THROW(read_vocabulary(write_lines("gap.jsonl", "{\"id\":0,\"token\":\"a\"}\n{\"id\":2,\"token\":\"b\"}\n")), Error);
  EXPECT_THROW(read_vocabulary(write_lines("dup.jsonl", "{\"id\":0,\"token\":\"a\"}\n{\"id\":1,\"token\":\"a\"}\n")), Error);
  EXPECT_THROW(read_vocabulary(write_lines("bad.jsonl", "{\"id\":0,\"tok\":\"a\"}\n")), Error);
  EXPECT_THROW(read_vocabulary(write_lines("empty.jsonl", "")), Error);
}
