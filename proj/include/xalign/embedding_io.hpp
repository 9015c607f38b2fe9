#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xalign/error.hpp"
#include "xalign/format.hpp"
#include "xalign/matrix.hpp"

namespace xalign {

inline bool is_ascii_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Ordered token list with a reverse index. Tokens are compared byte-exact:
// no Unicode normalization and no case folding.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(const std::vector<std::string>& tokens) {
    for (const auto& t : tokens) {
      if (!add(t)) fail(ErrorKind::InvalidToken, "duplicate token '" + t + "'");
    }
  }

  static void validate_token(std::string_view token) {
    if (token.empty()) fail(ErrorKind::EmptyToken, "empty token");
    for (char c : token)
      if (is_ascii_space(c))
        fail(ErrorKind::InvalidToken, "token contains whitespace: '" + std::string(token) + "'");
  }

  // Returns false (and leaves the vocab untouched) when the token exists.
  bool add(std::string token) {
    validate_token(token);
    auto [it, inserted] = index_.try_emplace(token, tokens_.size());
    if (!inserted) return false;
    tokens_.push_back(std::move(token));
    return true;
  }

  std::optional<std::size_t> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view token) const { return find(token).has_value(); }

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline void require_finite(const Matrix& m) {
  for (double v : m.values())
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteValue, "matrix contains NaN or Inf");
}

struct Embedding {
  Vocab vocab;
  Matrix matrix;

  Embedding() = default;
  Embedding(Vocab v, Matrix m) : vocab(std::move(v)), matrix(std::move(m)) {
    if (vocab.size() != matrix.rows())
      fail(ErrorKind::DimensionMismatch, "vocabulary size " + std::to_string(vocab.size()) +
                                             " does not match " + std::to_string(matrix.rows()) +
                                             " matrix rows");
    if (matrix.rows() == 0 || matrix.cols() == 0)
      fail(ErrorKind::DimensionMismatch, "embedding must have at least one row and one column");
    require_finite(matrix);
  }

  std::size_t size() const noexcept { return matrix.rows(); }
  std::size_t dim() const noexcept { return matrix.cols(); }
  std::optional<std::size_t> find(std::string_view token) const { return vocab.find(token); }
  std::span<const double> vector(std::size_t i) const { return matrix.row(i); }
};

struct ParseOptions {
  std::optional<std::size_t> max_vocab;
  std::optional<std::size_t> expected_dim;
};

struct ParsedEmbedding {
  Embedding embedding;
  std::size_t declared_rows = 0;
  std::size_t duplicate_tokens = 0;
  // Fewer data lines than the header announced (and no max_vocab cut-off).
  bool truncated = false;
};

namespace detail {

inline void strip_line_end(std::string& line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
}

inline std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(' ', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace detail

// Reads the text vector format: a "n d" header, then "token v1 ... vd" lines.
// Trailing spaces and CR before the newline are tolerated (fastText writes a
// trailing space on every row).
inline ParsedEmbedding parse_vec(std::istream& in, const ParseOptions& options = {}) {
  if (options.max_vocab && *options.max_vocab == 0)
    fail(ErrorKind::InvalidArgument, "max_vocab must be positive");

  std::string line;
  if (!std::getline(in, line)) fail_at(ErrorKind::MalformedHeader, 1, "missing header");
  detail::strip_line_end(line);
  const auto header = detail::split_spaces(line);
  if (header.size() != 2) fail_at(ErrorKind::MalformedHeader, 1, "expected 'n d', got '" + line + "'");
  const auto n = parse_integer(header[0]);
  const auto d = parse_integer(header[1]);
  if (!n || !d || *n <= 0 || *d <= 0)
    fail_at(ErrorKind::MalformedHeader, 1, "expected two positive integers, got '" + line + "'");
  const auto rows = static_cast<std::size_t>(*n);
  const auto dim = static_cast<std::size_t>(*d);
  if (options.expected_dim && *options.expected_dim != dim)
    fail_at(ErrorKind::DimensionMismatch, 1,
            "header dimension " + std::to_string(dim) + " != expected " +
                std::to_string(*options.expected_dim));

  const std::size_t capacity = options.max_vocab ? std::min(rows, *options.max_vocab) : rows;
  Vocab vocab;
  std::vector<double> values;
  values.reserve(capacity * dim);
  std::vector<double> row(dim);

  ParsedEmbedding result;
  result.declared_rows = rows;
  std::size_t data_lines = 0;
  std::size_t line_no = 1;
  while (data_lines < rows && vocab.size() < capacity && std::getline(in, line)) {
    ++line_no;
    ++data_lines;
    detail::strip_line_end(line);
    const auto fields = detail::split_spaces(line);
    if (fields.front().empty()) fail_at(ErrorKind::EmptyToken, line_no, "empty token");
    if (fields.size() - 1 != dim)
      fail_at(ErrorKind::DimensionMismatch, line_no,
              "expected " + std::to_string(dim) + " values, found " +
                  std::to_string(fields.size() - 1));
    for (std::size_t j = 0; j < dim; ++j) {
      switch (parse_double(fields[j + 1], row[j])) {
        case NumberParse::Ok: break;
        case NumberParse::NotANumber:
          fail_at(ErrorKind::NonNumericValue, line_no,
                  "value '" + std::string(fields[j + 1]) + "' is not a number");
        case NumberParse::NonFinite:
          fail_at(ErrorKind::NonFiniteValue, line_no,
                  "value '" + std::string(fields[j + 1]) + "' is not finite");
      }
    }
    std::string token(fields.front());
    try {
      if (!vocab.add(token)) {
        ++result.duplicate_tokens;
        continue;
      }
    } catch (const Error& e) {
      fail_at(e.kind(), line_no, e.what());
    }
    values.insert(values.end(), row.begin(), row.end());
  }

  if (vocab.size() < capacity && data_lines < rows) {
    if (vocab.size() == 0)
      fail(ErrorKind::TruncatedFile, "header announces " + std::to_string(rows) +
                                         " rows but no data rows were found");
    result.truncated = true;
  }
  if (vocab.size() == 0)
    fail(ErrorKind::TruncatedFile, "no rows parsed");

  Matrix matrix(vocab.size(), dim);
  std::copy(values.begin(), values.end(), matrix.values().begin());
  result.embedding = Embedding(std::move(vocab), std::move(matrix));
  return result;
}

inline ParsedEmbedding load_vec(const std::string& path, const ParseOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, "cannot open embedding file '" + path + "'");
  return parse_vec(in, options);
}

inline void write_vec(const Embedding& embedding, std::ostream& out, int precision = 4) {
  if (precision < 0) fail(ErrorKind::InvalidArgument, "precision must be non-negative");
  out << embedding.size() << ' ' << embedding.dim() << '\n';
  for (std::size_t i = 0; i < embedding.size(); ++i) {
    out << embedding.vocab[i];
    for (double v : embedding.vector(i)) out << ' ' << format_fixed(v, precision);
    out << '\n';
  }
  out.flush();
  if (!out) fail(ErrorKind::IoFailure, "failed to write embedding");
}

inline void save_vec(const Embedding& embedding, const std::string& path, int precision = 4) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoFailure, "cannot open '" + path + "' for writing");
  write_vec(embedding, out, precision);
}

}  // namespace xalign
