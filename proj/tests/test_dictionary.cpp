#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "support/oracles.hpp"
#include "xalign/dictionary.hpp"

namespace xalign {
namespace {

BilingualDictionary parse(const std::string& text) {
  std::istringstream in(text);
  return parse_dictionary(in);
}

ErrorKind parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::InvalidArgument;
}

TEST(ParseDictionary, TabSeparatedPair) {
  auto d = parse("sea\tòkun\n");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.pairs()[0], (WordPair{"sea", "òkun"}));
}

TEST(ParseDictionary, DuplicatesRemovedMultipleTranslationsKept) {
  auto d = parse("a x\na y\na x\n");
  EXPECT_EQ(d.pairs(), (std::vector<WordPair>{{"a", "x"}, {"a", "y"}}));
}

TEST(ParseDictionary, CommentsBlanksAndSpaceRuns) {
  auto d = parse("# header\n\nwater   omi\r\n  sea òkun  \n");
  EXPECT_EQ(d.pairs(), (std::vector<WordPair>{{"water", "omi"}, {"sea", "òkun"}}));
}

TEST(ParseDictionary, Errors) {
  EXPECT_EQ(parse_error("a\n"), ErrorKind::MalformedLine);
  EXPECT_EQ(parse_error("a b c\n"), ErrorKind::MalformedLine);
  EXPECT_EQ(parse_error("a\tb\tc\n"), ErrorKind::MalformedLine);
  EXPECT_EQ(parse_error("a\tb c\n"), ErrorKind::MalformedLine);
  EXPECT_EQ(parse_error("\tb\n"), ErrorKind::MalformedLine);
  EXPECT_EQ(parse_error("# only comments\n\n"), ErrorKind::EmptyDictionary);
}

TEST(ParseDictionary, SerializeRoundTrip) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> word(0, 30);
  for (int trial = 0; trial < 20; ++trial) {
    BilingualDictionary d;
    for (int i = 0; i < 40; ++i) d.add("s" + std::to_string(word(rng)), "t" + std::to_string(word(rng)));
    std::stringstream io;
    write_dictionary(d, io);
    EXPECT_EQ(parse_dictionary(io), d);
  }
}

TEST(BuildAnchors, SinglePair) {
  const Embedding src(Vocab({"a"}), Matrix{{1, 2}});
  const Embedding tgt(Vocab({"x"}), Matrix{{3, 4}});
  BilingualDictionary d;
  d.add("a", "x");
  const auto set = build_anchors(d, src, tgt);
  EXPECT_EQ(set.anchors.count(), 1u);
  EXPECT_EQ(set.anchors.dim(), 2u);
  EXPECT_EQ(set.anchors.source, (Matrix{{1, 2}}));
  EXPECT_EQ(set.anchors.target, (Matrix{{3, 4}}));
  EXPECT_EQ(set.stats.retained, 1u);
}

TEST(BuildAnchors, SourceOov) {
  const Embedding src(Vocab({"a"}), Matrix{{1, 0}});
  const Embedding tgt(Vocab({"x"}), Matrix{{0, 1}});
  BilingualDictionary d;
  d.add("a", "x");
  d.add("q", "x");
  d.add("q", "zz");  // OOV on both sides counts as source OOV
  d.add("a", "zz");
  const auto set = build_anchors(d, src, tgt);
  EXPECT_EQ(set.anchors.count(), 1u);
  EXPECT_EQ(set.stats.dropped_src_oov, 2u);
  EXPECT_EQ(set.stats.dropped_tgt_oov, 1u);
  EXPECT_EQ(set.stats.total_pairs, 4u);
}

TEST(BuildAnchors, Errors) {
  const Embedding src(Vocab({"a"}), Matrix{{1, 0}});
  const Embedding tgt3(Vocab({"x"}), Matrix{{0, 1, 0}});
  const Embedding tgt(Vocab({"x"}), Matrix{{0, 1}});
  BilingualDictionary d;
  d.add("b", "y");
  EXPECT_THROW(build_anchors(d, src, tgt3), Error);
  try {
    build_anchors(d, src, tgt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoAnchorsRetained);
  }
}

// 200 random pairs over a vocabulary where 40 pairs are forced OOV; the
// retained count and column correspondence are checked against a plain set
// membership scan.
TEST(BuildAnchors, RandomCoverageMatchesMembershipScan) {
  std::mt19937_64 rng(99);
  const std::size_t n = 120, d = 6;
  const Embedding src = testing::make_embedding(testing::random_matrix(n, d, rng), "s");
  const Embedding tgt = testing::make_embedding(testing::random_matrix(n, d, rng), "t");
  std::set<std::string> src_words(src.vocab.tokens().begin(), src.vocab.tokens().end());
  std::set<std::string> tgt_words(tgt.vocab.tokens().begin(), tgt.vocab.tokens().end());

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  BilingualDictionary dict;
  std::size_t forced = 0;
  while (dict.size() < 200) {
    std::string s = "s" + std::to_string(pick(rng));
    std::string t = "t" + std::to_string(pick(rng));
    if (forced < 40 && dict.size() % 5 == 0) {
      if (forced % 2) s = "oov_s" + std::to_string(forced);
      else t = "oov_t" + std::to_string(forced);
      if (dict.add(s, t)) ++forced;
      continue;
    }
    dict.add(s, t);
  }
  ASSERT_EQ(forced, 40u);

  std::size_t expected = 0;
  for (const auto& p : dict.pairs())
    if (src_words.count(p.source) && tgt_words.count(p.target)) ++expected;
  EXPECT_EQ(expected, 160u);

  const auto set = build_anchors(dict, src, tgt);
  EXPECT_EQ(set.stats.retained, expected);
  EXPECT_EQ(set.stats.retained + set.stats.dropped_src_oov + set.stats.dropped_tgt_oov, 200u);
  for (std::size_t j = 0; j < set.anchors.count(); ++j) {
    const auto& pair = set.anchors.pairs[j];
    EXPECT_TRUE(std::ranges::equal(set.anchors.source.row(j), src.vector(*src.find(pair.source))));
    EXPECT_TRUE(std::ranges::equal(set.anchors.target.row(j), tgt.vector(*tgt.find(pair.target))));
  }
}

}  // namespace
}  // namespace xalign
