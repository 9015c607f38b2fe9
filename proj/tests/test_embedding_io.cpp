#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <streambuf>

#include "support/oracles.hpp"
#include "xalign/embedding_io.hpp"

namespace xalign {
namespace {

ParsedEmbedding parse(const std::string& text, ParseOptions options = {}) {
  std::istringstream in(text);
  return parse_vec(in, options);
}

ErrorKind parse_error(const std::string& text, ParseOptions options = {}) {
  try {
    parse(text, options);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for: " << text;
  return ErrorKind::InvalidArgument;
}

TEST(ParseVec, SmallestWellFormedFile) {
  auto p = parse("2 2\na 1.0 0.0\nb 0.0 1.0");
  EXPECT_EQ(p.embedding.vocab.tokens(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(p.embedding.matrix, Matrix::identity(2));
  EXPECT_EQ(p.duplicate_tokens, 0u);
  EXPECT_FALSE(p.truncated);
}

TEST(ParseVec, DuplicateKeepsFirst) {
  auto p = parse("2 1\na 1.0\na 2.0");
  EXPECT_EQ(p.embedding.vocab.tokens(), (std::vector<std::string>{"a"}));
  EXPECT_EQ(p.embedding.matrix(0, 0), 1.0);
  EXPECT_EQ(p.duplicate_tokens, 1u);
}

TEST(ParseVec, ToleratesTrailingSpaceAndCrlf) {
  auto p = parse("2 2\r\nx 1 2 \r\ny 3 4 \r\n");
  EXPECT_EQ(p.embedding.size(), 2u);
  EXPECT_EQ(p.embedding.matrix(1, 1), 4.0);
}

TEST(ParseVec, DiacriticsAreByteExact) {
  auto p = parse("3 1\nòkun 1\nokun 2\nOkun 3\n");
  EXPECT_EQ(p.embedding.size(), 3u);
  EXPECT_EQ(*p.embedding.find("òkun"), 0u);
  EXPECT_EQ(*p.embedding.find("okun"), 1u);
  EXPECT_FALSE(p.embedding.find("OKUN"));
}

TEST(ParseVec, MaxVocabCountsUniqueTokensOnly) {
  auto p = parse("5 1\na 1\na 2\nb 3\nc 4\nd 5\n", {.max_vocab = 3});
  EXPECT_EQ(p.embedding.vocab.tokens(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_FALSE(p.truncated);
}

TEST(ParseVec, ExpectedDim) {
  EXPECT_EQ(parse("1 2\na 1 2\n", {.expected_dim = 2}).embedding.dim(), 2u);
  EXPECT_EQ(parse_error("1 2\na 1 2\n", {.expected_dim = 3}), ErrorKind::DimensionMismatch);
}

TEST(ParseVec, ErrorCategories) {
  EXPECT_EQ(parse_error(""), ErrorKind::MalformedHeader);
  EXPECT_EQ(parse_error("2\na 1\n"), ErrorKind::MalformedHeader);
  EXPECT_EQ(parse_error("two 2\n"), ErrorKind::MalformedHeader);
  EXPECT_EQ(parse_error("0 2\n"), ErrorKind::MalformedHeader);
  EXPECT_EQ(parse_error("1 2\na 1\n"), ErrorKind::DimensionMismatch);
  EXPECT_EQ(parse_error("1 2\na 1 2 3\n"), ErrorKind::DimensionMismatch);
  EXPECT_EQ(parse_error("1 2\na 1 x\n"), ErrorKind::NonNumericValue);
  EXPECT_EQ(parse_error("1 2\na 1 nan\n"), ErrorKind::NonFiniteValue);
  EXPECT_EQ(parse_error("1 2\na 1 1e999\n"), ErrorKind::NonFiniteValue);
  EXPECT_EQ(parse_error("1 2\n 1 2\n"), ErrorKind::EmptyToken);
  EXPECT_EQ(parse_error("2 2\n"), ErrorKind::TruncatedFile);
}

TEST(ParseVec, TruncatedWithRowsIsAWarning) {
  auto p = parse("3 1\na 1\nb 2\n");
  EXPECT_TRUE(p.truncated);
  EXPECT_EQ(p.declared_rows, 3u);
  EXPECT_EQ(p.embedding.size(), 2u);
}

TEST(ParseVec, ErrorCarriesLineNumber) {
  try {
    parse("2 2\na 1 2\nb 1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
    EXPECT_EQ(e.locations(), std::vector<std::size_t>{3});
  }
}

TEST(WriteVec, IdentityFormat) {
  auto e = parse("2 2\na 1.0 0.0\nb 0.0 1.0").embedding;
  std::ostringstream out;
  write_vec(e, out);
  EXPECT_EQ(out.str(), "2 2\na 1.0000 0.0000\nb 0.0000 1.0000\n");
}

struct FailingBuf : std::streambuf {
  int overflow(int) override { return traits_type::eof(); }
};

TEST(WriteVec, FailingSinkIsIoFailure) {
  auto e = parse("1 1\na 1\n").embedding;
  FailingBuf buf;
  std::ostream out(&buf);
  try {
    write_vec(e, out);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::IoFailure);
  }
}

// Property: parse(write(e, p)) keeps the vocabulary and drifts by at most 10^-p.
TEST(WriteVec, RoundTripProperty) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> rows(1, 12), cols(1, 6), prec(1, 8);
  for (int trial = 0; trial < 50; ++trial) {
    const Embedding e = testing::make_embedding(testing::random_matrix(rows(rng), cols(rng), rng, 3.0), "tok");
    const int p = trial == 0 ? 4 : prec(rng);
    std::stringstream io;
    write_vec(e, io, p);
    const Embedding back = parse_vec(io).embedding;
    ASSERT_EQ(back.vocab, e.vocab);
    EXPECT_LE(max_abs_diff(back.matrix, e.matrix), std::pow(10.0, -p));
  }
}

TEST(WriteVec, RoundTripRandom5x3) {
  std::mt19937_64 rng(11);
  const Embedding e = testing::make_embedding(testing::random_matrix(5, 3, rng));
  std::stringstream io;
  write_vec(e, io);
  EXPECT_LE(max_abs_diff(parse_vec(io).embedding.matrix, e.matrix), 1e-4);
}

TEST(Vocab, RejectsWhitespaceAndEmpty) {
  Vocab v;
  EXPECT_THROW(v.add(""), Error);
  EXPECT_THROW(v.add("a\tb"), Error);
  EXPECT_TRUE(v.add("US"));
  EXPECT_TRUE(v.add("us"));
  EXPECT_FALSE(v.add("us"));
  EXPECT_EQ(v.size(), 2u);
}

}  // namespace
}  // namespace xalign
