#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "xalign/dictionary.hpp"
#include "xalign/embedding_io.hpp"
#include "xalign/error.hpp"
#include "xalign/format.hpp"
#include "xalign/procrustes.hpp"
#include "xalign/retrieval.hpp"

namespace xalign {

struct QueryDiagnostics {
  std::string source;
  std::vector<std::string> gold;            // in-vocabulary gold translations
  std::optional<std::size_t> hit_rank;      // best gold rank within max(ks)
  std::vector<TranslationCandidate> candidates;
  friend bool operator==(const QueryDiagnostics&, const QueryDiagnostics&) = default;
};

struct EvalReport {
  std::vector<std::size_t> ks;
  std::map<std::size_t, double> precision;  // percent, rounded to 2 decimals
  std::map<std::size_t, std::size_t> hits;
  std::size_t evaluated_queries = 0;
  std::size_t skipped_oov = 0;
  std::vector<QueryDiagnostics> per_query;
  std::map<std::string, std::string> meta;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline double percentage(std::size_t hits, std::size_t total) {
  return std::round(10000.0 * static_cast<double>(hits) / static_cast<double>(total)) / 100.0;
}

inline std::vector<std::size_t> normalize_ks(std::vector<std::size_t> ks) {
  if (ks.empty()) ks = {1, 5, 10};
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.front() == 0) fail(ErrorKind::InvalidArgument, "k values must be positive");
  return ks;
}

// Source words are grouped; a query counts as correct at k when any of its
// gold translations is among the k nearest targets. Source words missing from
// the source embedding, or whose gold set is entirely missing from the
// target embedding, are skipped and counted in skipped_oov.
inline EvalReport precision_at_k(const BilingualDictionary& eval_dict, const Embedding& src,
                                 const Embedding& tgt, const AlignmentMap& map,
                                 std::vector<std::size_t> ks = {1, 5, 10}) {
  ks = normalize_ks(std::move(ks));
  const std::size_t max_k = ks.back();
  const CosineIndex index(tgt);
  index.check_k(max_k);
  if (src.dim() != map.dim() || tgt.dim() != map.dim())
    fail(ErrorKind::DimensionMismatch, "embedding and map dimensions differ");

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::string>> gold;
  for (const auto& pair : eval_dict.pairs()) {
    auto [it, inserted] = gold.try_emplace(pair.source);
    if (inserted) order.push_back(pair.source);
    if (std::find(it->second.begin(), it->second.end(), pair.target) == it->second.end())
      it->second.push_back(pair.target);
  }

  EvalReport report;
  report.ks = ks;
  for (std::size_t k : ks) report.hits[k] = 0;
  for (const auto& source : order) {
    if (!src.find(source)) {
      ++report.skipped_oov;
      continue;
    }
    QueryDiagnostics diag;
    diag.source = source;
    for (const auto& g : gold[source])
      if (tgt.find(g)) diag.gold.push_back(g);
    if (diag.gold.empty()) {
      ++report.skipped_oov;
      continue;
    }
    diag.candidates = translate(source, src, index, map, max_k);
    for (const auto& c : diag.candidates) {
      if (std::find(diag.gold.begin(), diag.gold.end(), c.token) != diag.gold.end()) {
        diag.hit_rank = c.rank;
        break;
      }
    }
    for (std::size_t k : ks)
      if (diag.hit_rank && *diag.hit_rank <= k) ++report.hits[k];
    report.per_query.push_back(std::move(diag));
  }
  report.evaluated_queries = report.per_query.size();
  if (report.evaluated_queries == 0)
    fail(ErrorKind::EmptyEvaluationSet,
         "all " + std::to_string(report.skipped_oov) + " evaluation queries are out of vocabulary");
  for (std::size_t k : ks) report.precision[k] = percentage(report.hits[k], report.evaluated_queries);

  report.meta["preprocess"] = std::string(to_string(map.meta.mode));
  report.meta["retrieval_metric"] = "cosine";
  report.meta["source"] = map.meta.source_id;
  report.meta["target"] = map.meta.target_id;
  if (map.meta.mode == PreprocessMode::CenterNormalize) report.meta["preprocess_order"] = "center-then-l2";
  return report;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["ks"] = report.ks;
  auto& precision = j["precision"] = nlohmann::ordered_json::object();
  for (std::size_t k : report.ks) precision[std::to_string(k)] = report.precision.at(k);
  auto& hits = j["hits"] = nlohmann::ordered_json::object();
  for (std::size_t k : report.ks) hits[std::to_string(k)] = report.hits.at(k);
  j["evaluated_queries"] = report.evaluated_queries;
  j["skipped_oov"] = report.skipped_oov;
  auto& per_query = j["per_query"] = nlohmann::ordered_json::array();
  for (const auto& q : report.per_query) {
    nlohmann::ordered_json entry;
    entry["source"] = q.source;
    entry["gold"] = q.gold;
    entry["hit_rank"] = q.hit_rank ? nlohmann::ordered_json(*q.hit_rank) : nlohmann::ordered_json(nullptr);
    auto& cands = entry["candidates"] = nlohmann::ordered_json::array();
    for (const auto& c : q.candidates)
      cands.push_back({{"token", c.token}, {"score", c.score}, {"rank", c.rank}});
    per_query.push_back(std::move(entry));
  }
  j["meta"] = report.meta;
  return j;
}

inline EvalReport report_from_json(const nlohmann::ordered_json& j) {
  try {
    EvalReport report;
    report.ks = j.at("ks").get<std::vector<std::size_t>>();
    for (std::size_t k : report.ks) {
      report.precision[k] = j.at("precision").at(std::to_string(k)).get<double>();
      report.hits[k] = j.at("hits").at(std::to_string(k)).get<std::size_t>();
    }
    report.evaluated_queries = j.at("evaluated_queries").get<std::size_t>();
    report.skipped_oov = j.at("skipped_oov").get<std::size_t>();
    for (const auto& entry : j.at("per_query")) {
      QueryDiagnostics q;
      q.source = entry.at("source").get<std::string>();
      q.gold = entry.at("gold").get<std::vector<std::string>>();
      if (!entry.at("hit_rank").is_null()) q.hit_rank = entry.at("hit_rank").get<std::size_t>();
      for (const auto& c : entry.at("candidates"))
        q.candidates.push_back({c.at("token").get<std::string>(), c.at("score").get<double>(),
                                c.at("rank").get<std::size_t>()});
      report.per_query.push_back(std::move(q));
    }
    report.meta = j.at("meta").get<std::map<std::string, std::string>>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::MalformedReport, e.what());
  }
}

enum class ReportFormat { Json, Tsv };

inline std::string condition_name(const EvalReport& report) {
  auto it = report.meta.find("condition");
  return it != report.meta.end() ? it->second : "condition";
}

inline void write_tsv_header(const std::vector<std::size_t>& ks, std::ostream& out) {
  out << "condition";
  for (std::size_t k : ks) out << "\tP@" << k;
  out << '\n';
}

inline void write_tsv_row(const EvalReport& report, std::ostream& out) {
  out << condition_name(report);
  for (std::size_t k : report.ks) out << '\t' << format_fixed(report.precision.at(k), 2);
  out << '\n';
}

inline void write_report(const EvalReport& report, std::ostream& out, ReportFormat format) {
  if (format == ReportFormat::Json) {
    out << report_to_json(report).dump(2) << '\n';
  } else {
    write_tsv_header(report.ks, out);
    write_tsv_row(report, out);
  }
  out.flush();
  if (!out) fail(ErrorKind::IoFailure, "failed to write report");
}

inline void save_report(const EvalReport& report, const std::string& path, ReportFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoFailure, "cannot open '" + path + "' for writing");
  write_report(report, out, format);
}

inline EvalReport load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, "cannot open report '" + path + "'");
  try {
    return report_from_json(nlohmann::ordered_json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::MalformedReport, e.what());
  }
}

}  // namespace xalign
