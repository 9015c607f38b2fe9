#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "support/oracles.hpp"
#include "xalign/procrustes.hpp"

namespace xalign {
namespace {

AnchorMatrices anchors_from(const Matrix& x_rows, const Matrix& y_rows) {
  return {x_rows, y_rows, {}};
}

// Y = R X for anchors stored as rows: y_k = R x_k.
Matrix rotate_rows(const Matrix& r, const Matrix& x) { return multiply_transposed(x, r); }

TEST(Procrustes, SelfAlignmentIsIdentity) {
  const Matrix basis = Matrix::identity(4);
  const auto map = solve_procrustes(anchors_from(basis, basis));
  EXPECT_LE(max_abs_diff(map.w, Matrix::identity(4)), 1e-10);
  EXPECT_FALSE(map.meta.degenerate_anchors);
}

TEST(Procrustes, Rotation30Degrees) {
  const double c = std::sqrt(3.0) / 2.0, s = 0.5;
  const Matrix r{{c, -s}, {s, c}};
  const Matrix x{{1, 0}, {0, 1}, {2, 3}, {-1, 0.5}};
  const auto map = solve_procrustes(anchors_from(x, rotate_rows(r, x)));
  EXPECT_LE(max_abs_diff(map.w, r), 1e-10);
}

TEST(Procrustes, ReflectionsAllowed) {
  const Matrix r{{1, 0}, {0, -1}};
  const Matrix x{{1, 2}, {3, -1}, {0.5, 0.5}};
  const auto map = solve_procrustes(anchors_from(x, rotate_rows(r, x)));
  EXPECT_LE(max_abs_diff(map.w, r), 1e-10);
}

TEST(Procrustes, ExactRecoveryRandom) {
  std::mt19937_64 rng(31);
  for (std::size_t d : {3u, 8u, 25u}) {
    const Matrix r = testing::random_orthogonal(d, rng);
    const Matrix x = testing::random_matrix(2 * d, d, rng);
    const auto map = solve_procrustes(anchors_from(x, rotate_rows(r, x)));
    EXPECT_LE(max_abs_diff(map.w, r), 1e-8);
    EXPECT_LE(orthogonality_error(map.w), 1e-10);
  }
}

TEST(Procrustes, SampledOptimality) {
  std::mt19937_64 rng(77);
  const std::size_t d = 4, m = 20;
  const Matrix r = testing::random_orthogonal(d, rng);
  const Matrix x = testing::random_matrix(m, d, rng);
  Matrix y = rotate_rows(r, x);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (double& v : y.values()) v += noise(rng);
  const AnchorMatrices a = anchors_from(x, y);
  const auto map = solve_procrustes(a);
  const double best = testing::procrustes_residual(map.w, a);
  for (int i = 0; i < 1000; ++i)
    ASSERT_LE(best, testing::procrustes_residual(testing::random_orthogonal(d, rng), a));
}

TEST(Procrustes, RankDeficientWarnsButStaysOrthogonal) {
  const Matrix x{{1, 0, 0}, {2, 0, 0}};
  const Matrix y{{0, 1, 0}, {0, 2, 0}};
  const auto map = solve_procrustes(anchors_from(x, y));
  EXPECT_TRUE(map.meta.degenerate_anchors);
  EXPECT_LE(orthogonality_error(map.w), 1e-10);
  EXPECT_NEAR(map.w(1, 0), 1.0, 1e-12);
}

TEST(ApplyMap, IdentityAndQuarterTurn) {
  const Embedding e(Vocab({"a", "b"}), Matrix{{1, 0}, {0.5, 2}});
  AlignmentMap id{Matrix::identity(2), {}};
  EXPECT_EQ(apply_map(id, e).matrix, e.matrix);

  AlignmentMap quarter{Matrix{{0, -1}, {1, 0}}, {}};
  const Embedding out = apply_map(quarter, e);
  EXPECT_EQ(out.matrix(0, 0), 0.0);
  EXPECT_EQ(out.matrix(0, 1), 1.0);
  EXPECT_EQ(out.vocab, e.vocab);

  AlignmentMap wrong{Matrix::identity(3), {}};
  EXPECT_THROW(apply_map(wrong, e), Error);
}

// Isometry: norms, distances and cosines survive a random orthogonal map.
TEST(ApplyMap, PreservesGeometry) {
  std::mt19937_64 rng(55);
  const Embedding e = testing::make_embedding(testing::random_matrix(30, 12, rng, 4.0));
  AlignmentMap map{testing::random_orthogonal(12, rng), {}};
  const Embedding out = apply_map(map, e);
  for (std::size_t i = 0; i < e.size(); ++i) {
    EXPECT_NEAR(norm2(out.vector(i)), norm2(e.vector(i)), 1e-12 * std::max(1.0, norm2(e.vector(i))));
    for (std::size_t j = i + 1; j < e.size(); j += 7) {
      const double before = dot(e.vector(i), e.vector(j)) / (norm2(e.vector(i)) * norm2(e.vector(j)));
      const double after = dot(out.vector(i), out.vector(j)) / (norm2(out.vector(i)) * norm2(out.vector(j)));
      EXPECT_NEAR(after, before, 1e-10);
    }
  }
}

TEST(MapFile, RoundTripIsExact) {
  std::mt19937_64 rng(60);
  AlignmentMap map{testing::random_orthogonal(5, rng), {}};
  map.meta.mode = PreprocessMode::CenterNormalize;
  map.meta.anchors = 42;
  map.meta.source_id = "wiki.en";
  map.meta.target_id = "wiki.yo";
  map.meta.extra["condition"] = "wiki.yo-norm";
  std::stringstream io;
  write_map(map, io);
  const std::string text = io.str();
  EXPECT_EQ(text.rfind("d 5\n", 0), 0u);
  EXPECT_NE(text.find("#meta mode=center-normalize\n"), std::string::npos);

  const AlignmentMap back = read_map(io);
  EXPECT_EQ(back.w, map.w);
  EXPECT_EQ(back.meta.mode, map.meta.mode);
  EXPECT_EQ(back.meta.anchors, 42u);
  EXPECT_EQ(back.meta.target_id, "wiki.yo");
  EXPECT_EQ(back.meta.extra.at("condition"), "wiki.yo-norm");
}

TEST(MapFile, Malformed) {
  auto kind = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_map(in);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidArgument;
  };
  EXPECT_EQ(kind("x 2\n"), ErrorKind::MalformedMap);
  EXPECT_EQ(kind("d 2\n1 0\n"), ErrorKind::MalformedMap);
  EXPECT_EQ(kind("d 2\n1 0\n0 1\n"), ErrorKind::MalformedMap);  // no mode
  EXPECT_EQ(kind("d 2\n1 0\n0 q\n#meta mode=none\n"), ErrorKind::MalformedMap);
  EXPECT_EQ(kind("d 1\n1\n#meta mode=whiten\n"), ErrorKind::MalformedMap);
}

}  // namespace
}  // namespace xalign
