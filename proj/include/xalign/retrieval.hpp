#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "xalign/embedding_io.hpp"
#include "xalign/error.hpp"
#include "xalign/matrix.hpp"
#include "xalign/procrustes.hpp"

namespace xalign {

struct TranslationCandidate {
  std::string token;
  double score = 0.0;  // cosine similarity
  std::size_t rank = 0;  // 1-based
  friend bool operator==(const TranslationCandidate&, const TranslationCandidate&) = default;
};

struct QueryResult {
  std::string query;
  bool oov = false;
  std::vector<TranslationCandidate> candidates;
  friend bool operator==(const QueryResult&, const QueryResult&) = default;
};

// Unit-normalized copy of the target rows; zero rows stay zero and score 0
// against every query.
class CosineIndex {
 public:
  explicit CosineIndex(const Embedding& target) : target_(&target), rows_(target.matrix) {
    for (std::size_t r = 0; r < rows_.rows(); ++r) {
      auto row = rows_.row(r);
      const double n = norm2(row);
      if (n > 0.0)
        for (double& v : row) v /= n;
    }
  }

  std::size_t size() const noexcept { return rows_.rows(); }
  const Embedding& target() const noexcept { return *target_; }

  // Exact full scan. Ordered by score descending, then target index ascending.
  std::vector<TranslationCandidate> nearest(std::span<const double> query, std::size_t k) const {
    check_k(k);
    if (query.size() != rows_.cols()) fail(ErrorKind::DimensionMismatch, "query dimension mismatch");
    std::vector<double> q(query.begin(), query.end());
    const double qn = norm2(q);
    if (qn > 0.0)
      for (double& v : q) v /= qn;

    std::vector<double> scores(rows_.rows());
    for (std::size_t r = 0; r < rows_.rows(); ++r) scores[r] = dot(q, rows_.row(r));

    std::vector<std::size_t> order(rows_.rows());
    std::iota(order.begin(), order.end(), 0);
    auto better = [&](std::size_t a, std::size_t b) {
      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);

    std::vector<TranslationCandidate> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
      out.push_back({target_->vocab[order[i]], scores[order[i]], i + 1});
    return out;
  }

  void check_k(std::size_t k) const {
    if (k == 0) fail(ErrorKind::InvalidArgument, "k must be positive");
    if (k > rows_.rows())
      fail(ErrorKind::KTooLarge, "k=" + std::to_string(k) + " exceeds target vocabulary size " +
                                     std::to_string(rows_.rows()));
  }

 private:
  const Embedding* target_;
  Matrix rows_;
};

inline std::vector<TranslationCandidate> translate(std::string_view query, const Embedding& src,
                                                   const CosineIndex& index, const AlignmentMap& map,
                                                   std::size_t k) {
  index.check_k(k);
  const auto row = src.find(query);
  if (!row) fail(ErrorKind::QueryOov, "query '" + std::string(query) + "' is not in the source vocabulary");
  return index.nearest(map_vector(map, src.vector(*row)), k);
}

inline std::vector<TranslationCandidate> translate(std::string_view query, const Embedding& src,
                                                   const Embedding& tgt, const AlignmentMap& map,
                                                   std::size_t k) {
  return translate(query, src, CosineIndex(tgt), map, k);
}

// OOV queries yield a result with `oov` set instead of an error.
inline std::vector<QueryResult> batch_translate(const std::vector<std::string>& queries,
                                                const Embedding& src, const Embedding& tgt,
                                                const AlignmentMap& map, std::size_t k) {
  const CosineIndex index(tgt);
  index.check_k(k);
  std::vector<QueryResult> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    QueryResult result{q, false, {}};
    if (src.find(q))
      result.candidates = translate(q, src, index, map, k);
    else
      result.oov = true;
    out.push_back(std::move(result));
  }
  return out;
}

}  // namespace xalign
