#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xalign/embedding_io.hpp"
#include "xalign/error.hpp"
#include "xalign/matrix.hpp"

namespace xalign {

struct WordPair {
  std::string source;
  std::string target;
  friend auto operator<=>(const WordPair&, const WordPair&) = default;
};

// Ordered list of translation pairs. A source word may appear with several
// targets; exact duplicate pairs are rejected.
class BilingualDictionary {
 public:
  BilingualDictionary() = default;

  // Returns false when the pair is already present.
  bool add(std::string source, std::string target) {
    Vocab::validate_token(source);
    Vocab::validate_token(target);
    WordPair pair{std::move(source), std::move(target)};
    if (!seen_.insert(pair).second) return false;
    pairs_.push_back(std::move(pair));
    return true;
  }

  const std::vector<WordPair>& pairs() const noexcept { return pairs_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }

  friend bool operator==(const BilingualDictionary& a, const BilingualDictionary& b) {
    return a.pairs_ == b.pairs_;
  }

 private:
  std::vector<WordPair> pairs_;
  std::set<WordPair> seen_;
};

// One pair per line, separated by a single tab or by runs of spaces. Blank
// lines and lines starting with '#' are skipped.
inline BilingualDictionary parse_dictionary(std::istream& in) {
  BilingualDictionary dict;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string> fields;
    if (line.find('\t') != std::string::npos) {
      std::size_t tab = line.find('\t');
      fields.push_back(line.substr(0, tab));
      fields.push_back(line.substr(tab + 1));
      if (fields[1].find('\t') != std::string::npos) fields.push_back({});
    } else {
      std::size_t pos = 0;
      while (pos < line.size()) {
        while (pos < line.size() && line[pos] == ' ') ++pos;
        if (pos >= line.size()) break;
        std::size_t end = line.find(' ', pos);
        if (end == std::string::npos) end = line.size();
        fields.push_back(line.substr(pos, end - pos));
        pos = end;
      }
    }
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      fail_at(ErrorKind::MalformedLine, line_no, "expected 'source<TAB>target', got '" + line + "'");
    try {
      dict.add(std::move(fields[0]), std::move(fields[1]));
    } catch (const Error& e) {
      fail_at(ErrorKind::MalformedLine, line_no, e.what());
    }
  }
  if (dict.empty()) fail(ErrorKind::EmptyDictionary, "dictionary contains no pairs");
  return dict;
}

inline BilingualDictionary load_dictionary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, "cannot open dictionary file '" + path + "'");
  return parse_dictionary(in);
}

inline void write_dictionary(const BilingualDictionary& dict, std::ostream& out) {
  for (const auto& p : dict.pairs()) out << p.source << '\t' << p.target << '\n';
  out.flush();
  if (!out) fail(ErrorKind::IoFailure, "failed to write dictionary");
}

// Anchor vectors stored one pair per row: row j of `source` and row j of
// `target` are the two sides of pairs[j]. Read as columns, these are the
// d x m matrices X and Y of the Procrustes objective.
struct AnchorMatrices {
  Matrix source;  // m x d
  Matrix target;  // m x d
  std::vector<WordPair> pairs;

  std::size_t count() const noexcept { return source.rows(); }
  std::size_t dim() const noexcept { return source.cols(); }
};

struct CoverageStats {
  std::size_t total_pairs = 0;
  std::size_t retained = 0;
  std::size_t dropped_src_oov = 0;  // includes pairs OOV on both sides
  std::size_t dropped_tgt_oov = 0;
};

struct AnchorSet {
  AnchorMatrices anchors;
  CoverageStats stats;
};

inline AnchorSet build_anchors(const BilingualDictionary& dict, const Embedding& src,
                               const Embedding& tgt) {
  if (src.dim() != tgt.dim())
    fail(ErrorKind::DimensionMismatch, "source dimension " + std::to_string(src.dim()) +
                                           " != target dimension " + std::to_string(tgt.dim()));
  if (dict.empty()) fail(ErrorKind::EmptyDictionary, "dictionary contains no pairs");

  CoverageStats stats;
  stats.total_pairs = dict.size();
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  std::vector<WordPair> kept;
  for (const auto& pair : dict.pairs()) {
    const auto s = src.find(pair.source);
    if (!s) {
      ++stats.dropped_src_oov;
      continue;
    }
    const auto t = tgt.find(pair.target);
    if (!t) {
      ++stats.dropped_tgt_oov;
      continue;
    }
    rows.emplace_back(*s, *t);
    kept.push_back(pair);
  }
  stats.retained = rows.size();
  if (rows.empty())
    fail(ErrorKind::NoAnchorsRetained,
         "none of the " + std::to_string(dict.size()) + " dictionary pairs is in both vocabularies");

  const std::size_t d = src.dim();
  AnchorSet out{{Matrix(rows.size(), d), Matrix(rows.size(), d), std::move(kept)}, stats};
  for (std::size_t j = 0; j < rows.size(); ++j) {
    std::ranges::copy(src.vector(rows[j].first), out.anchors.source.row(j).begin());
    std::ranges::copy(tgt.vector(rows[j].second), out.anchors.target.row(j).begin());
  }
  return out;
}

}  // namespace xalign
