#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "xalign/dictionary.hpp"
#include "xalign/embedding_io.hpp"
#include "xalign/error.hpp"
#include "xalign/evaluation.hpp"
#include "xalign/preprocess.hpp"
#include "xalign/procrustes.hpp"
#include "xalign/projection.hpp"
#include "xalign/retrieval.hpp"

// End-to-end steps behind the command-line subcommands. Each step reads its
// inputs from disk and writes its outputs to RunConfig::out_dir.
namespace xalign::pipeline {

struct RunConfig {
  std::string src_embedding_path;
  std::string tgt_embedding_path;
  std::string train_dict_path;
  std::string eval_dict_path;
  std::string tokens_path;  // optional token list for plotting
  std::optional<PreprocessMode> mode;  // unset: none for align, map's mode for the rest
  std::vector<std::size_t> ks{1, 5, 10};
  std::optional<std::size_t> max_vocab_src;
  std::optional<std::size_t> max_vocab_tgt;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
};

inline void require_path(const std::string& path, std::string_view flag) {
  if (path.empty()) fail(ErrorKind::InvalidArgument, "missing required " + std::string(flag));
}

// File name without directory and without a trailing ".vec"/".txt".
inline std::string embedding_id(const std::string& path) {
  std::filesystem::path p(path);
  if (p.extension() == ".vec" || p.extension() == ".txt") return p.stem().string();
  return p.filename().string();
}

inline std::string condition_id(const std::string& target_id, PreprocessMode mode) {
  return target_id + (mode == PreprocessMode::None ? "-unnorm" : "-norm");
}

inline Embedding load_embedding(const std::string& path, std::optional<std::size_t> max_vocab,
                                std::ostream& log) {
  ParseOptions options;
  options.max_vocab = max_vocab;
  ParsedEmbedding parsed = load_vec(path, options);
  log << "loaded " << path << ": " << parsed.embedding.size() << " x " << parsed.embedding.dim();
  if (parsed.duplicate_tokens) log << ", " << parsed.duplicate_tokens << " duplicate tokens ignored";
  if (parsed.truncated) log << ", truncated (header announced " << parsed.declared_rows << " rows)";
  log << '\n';
  return std::move(parsed.embedding);
}

inline std::filesystem::path output_path(const RunConfig& config, const std::string& name) {
  std::filesystem::path dir(config.out_dir.empty() ? "." : config.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoFailure, "cannot create output directory '" + dir.string() + "'");
  return dir / name;
}

struct AlignOutcome {
  AlignmentMap map;
  CoverageStats stats;
  std::string map_path;
};

inline AlignmentMap align_loaded(const Embedding& src, const Embedding& tgt,
                                 const BilingualDictionary& dict, PreprocessMode mode,
                                 const std::string& src_id, const std::string& tgt_id,
                                 CoverageStats* stats = nullptr) {
  const Embedding src_p = apply_mode(src, mode);
  const Embedding tgt_p = apply_mode(tgt, mode);
  const AnchorSet anchors = build_anchors(dict, src_p, tgt_p);
  AlignmentMap map = solve_procrustes(anchors.anchors);
  map.meta.mode = mode;
  map.meta.source_id = src_id;
  map.meta.target_id = tgt_id;
  map.meta.extra["condition"] = condition_id(tgt_id, mode);
  map.meta.extra["dropped_src_oov"] = std::to_string(anchors.stats.dropped_src_oov);
  map.meta.extra["dropped_tgt_oov"] = std::to_string(anchors.stats.dropped_tgt_oov);
  if (mode == PreprocessMode::CenterNormalize) map.meta.extra["preprocess_order"] = "center-then-l2";
  if (stats) *stats = anchors.stats;
  return map;
}

inline void print_coverage(const CoverageStats& s, std::ostream& log) {
  log << "anchors: total_pairs=" << s.total_pairs << " retained=" << s.retained
      << " dropped_src_oov=" << s.dropped_src_oov << " dropped_tgt_oov=" << s.dropped_tgt_oov << '\n';
}

inline AlignOutcome run_align(const RunConfig& config, std::ostream& log) {
  require_path(config.src_embedding_path, "--src-emb");
  require_path(config.tgt_embedding_path, "--tgt-emb");
  require_path(config.train_dict_path, "--train-dict");
  const PreprocessMode mode = config.mode.value_or(PreprocessMode::None);

  const BilingualDictionary dict = load_dictionary(config.train_dict_path);
  const Embedding src = load_embedding(config.src_embedding_path, config.max_vocab_src, log);
  const Embedding tgt = load_embedding(config.tgt_embedding_path, config.max_vocab_tgt, log);

  AlignOutcome outcome;
  outcome.map = align_loaded(src, tgt, dict, mode, embedding_id(config.src_embedding_path),
                             embedding_id(config.tgt_embedding_path), &outcome.stats);
  print_coverage(outcome.stats, log);
  if (outcome.map.meta.degenerate_anchors)
    log << "warning: DegenerateAnchors: cross-covariance is rank deficient\n";

  outcome.map_path = output_path(config, outcome.map.meta.extra.at("condition") + ".map").string();
  save_map(outcome.map, outcome.map_path);
  log << "wrote " << outcome.map_path << '\n';
  return outcome;
}

// The preprocessing used at evaluation time must be the one the map was
// fitted under.
inline PreprocessMode resolve_mode(const RunConfig& config, const AlignmentMap& map) {
  if (config.mode && *config.mode != map.meta.mode)
    fail(ErrorKind::ModeMismatch, "requested mode '" + std::string(to_string(*config.mode)) +
                                      "' but the map was fitted with '" +
                                      std::string(to_string(map.meta.mode)) + "'");
  return map.meta.mode;
}

struct LoadedSpaces {
  AlignmentMap map;
  Embedding src;  // preprocessed
  Embedding tgt;  // preprocessed
  PreprocessMode mode;
};

inline LoadedSpaces load_spaces(const RunConfig& config, const std::string& map_path, std::ostream& log) {
  require_path(config.src_embedding_path, "--src-emb");
  require_path(config.tgt_embedding_path, "--tgt-emb");
  require_path(map_path, "--map");
  AlignmentMap map = load_map(map_path);
  const PreprocessMode mode = resolve_mode(config, map);
  Embedding src = apply_mode(load_embedding(config.src_embedding_path, config.max_vocab_src, log), mode);
  Embedding tgt = apply_mode(load_embedding(config.tgt_embedding_path, config.max_vocab_tgt, log), mode);
  if (src.dim() != map.dim() || tgt.dim() != map.dim())
    fail(ErrorKind::DimensionMismatch, "embedding dimensions do not match the map dimension " +
                                           std::to_string(map.dim()));
  return {std::move(map), std::move(src), std::move(tgt), mode};
}

inline EvalReport evaluate_loaded(const BilingualDictionary& eval_dict, const Embedding& src,
                                  const Embedding& tgt, const AlignmentMap& map,
                                  const std::vector<std::size_t>& ks) {
  EvalReport report = precision_at_k(eval_dict, src, tgt, map, ks);
  report.meta["condition"] = condition_id(map.meta.target_id, map.meta.mode);
  return report;
}

struct EvaluateOutcome {
  EvalReport report;
  std::string json_path;
  std::string tsv_path;
};

inline EvaluateOutcome run_evaluate(const RunConfig& config, const std::string& map_path, std::ostream& log) {
  require_path(config.eval_dict_path, "--eval-dict");
  const BilingualDictionary eval_dict = load_dictionary(config.eval_dict_path);
  const LoadedSpaces spaces = load_spaces(config, map_path, log);

  EvaluateOutcome outcome;
  outcome.report = evaluate_loaded(eval_dict, spaces.src, spaces.tgt, spaces.map, config.ks);
  const std::string name = outcome.report.meta["condition"];
  outcome.json_path = output_path(config, name + ".report.json").string();
  outcome.tsv_path = output_path(config, name + ".report.tsv").string();
  save_report(outcome.report, outcome.json_path, ReportFormat::Json);
  save_report(outcome.report, outcome.tsv_path, ReportFormat::Tsv);
  log << "evaluated " << outcome.report.evaluated_queries << " queries (" << outcome.report.skipped_oov
      << " skipped as OOV)\n";
  write_tsv_header(outcome.report.ks, log);
  write_tsv_row(outcome.report, log);
  return outcome;
}

// One line per candidate: query<TAB>rank<TAB>candidate<TAB>score; OOV
// queries produce query<TAB>OOV.
inline void write_translations(const std::vector<QueryResult>& results, std::ostream& out) {
  for (const auto& r : results) {
    if (r.oov) {
      out << r.query << "\tOOV\n";
      continue;
    }
    for (const auto& c : r.candidates)
      out << r.query << '\t' << c.rank << '\t' << c.token << '\t' << format_fixed(c.score, 6) << '\n';
  }
}

inline std::vector<std::string> read_query_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, "cannot open query file '" + path + "'");
  std::vector<std::string> queries;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || is_ascii_space(line.back()))) line.pop_back();
    if (!line.empty()) queries.push_back(line);
  }
  return queries;
}

inline void run_translate(const RunConfig& config, const std::string& map_path,
                          const std::vector<std::string>& queries, std::size_t k, std::ostream& out,
                          std::ostream& log) {
  const LoadedSpaces spaces = load_spaces(config, map_path, log);
  write_translations(batch_translate(queries, spaces.src, spaces.tgt, spaces.map, k), out);
}

struct PlotSelection {
  std::vector<std::string> source;
  std::vector<std::string> target;
  std::size_t skipped = 0;
};

// Token list file: one "<src|tgt><whitespace><token>" entry per line.
inline PlotSelection select_plot_tokens(const RunConfig& config, const Embedding& src, const Embedding& tgt) {
  PlotSelection sel;
  std::set<std::string> seen_src, seen_tgt;
  auto take = [&](const std::string& token, Language lang) {
    const Embedding& emb = lang == Language::Source ? src : tgt;
    auto& seen = lang == Language::Source ? seen_src : seen_tgt;
    auto& list = lang == Language::Source ? sel.source : sel.target;
    if (!emb.find(token)) {
      ++sel.skipped;
      return;
    }
    if (seen.insert(token).second) list.push_back(token);
  };
  if (!config.tokens_path.empty()) {
    const BilingualDictionary list = load_dictionary(config.tokens_path);
    for (const auto& pair : list.pairs()) {
      if (pair.source == "src")
        take(pair.target, Language::Source);
      else if (pair.source == "tgt")
        take(pair.target, Language::Target);
      else
        fail(ErrorKind::MalformedLine, "token list entries must start with 'src' or 'tgt', got '" +
                                           pair.source + "'");
    }
  } else {
    require_path(config.eval_dict_path, "--eval-dict or --tokens");
    const BilingualDictionary eval = load_dictionary(config.eval_dict_path);
    for (const auto& pair : eval.pairs()) {
      take(pair.source, Language::Source);
      take(pair.target, Language::Target);
    }
  }
  return sel;
}

struct PlotOutcome {
  Projection2D projection;
  std::string csv_path;
  std::string svg_path;
};

inline PlotOutcome run_plot(const RunConfig& config, const std::string& map_path, ProjectionMethod method,
                            std::ostream& log) {
  const LoadedSpaces spaces = load_spaces(config, map_path, log);
  const PlotSelection sel = select_plot_tokens(config, spaces.src, spaces.tgt);
  if (sel.skipped) log << "plot: " << sel.skipped << " tokens not in vocabulary were skipped\n";

  const std::size_t d = spaces.map.dim();
  Matrix points(sel.source.size() + sel.target.size(), d);
  std::vector<PointLabel> labels;
  std::size_t r = 0;
  for (const auto& token : sel.source) {
    const auto mapped = map_vector(spaces.map, spaces.src.vector(*spaces.src.find(token)));
    std::ranges::copy(mapped, points.row(r++).begin());
    labels.push_back({token, Language::Source});
  }
  for (const auto& token : sel.target) {
    std::ranges::copy(spaces.tgt.vector(*spaces.tgt.find(token)), points.row(r++).begin());
    labels.push_back({token, Language::Target});
  }

  PlotOutcome outcome;
  if (method == ProjectionMethod::Pca) {
    outcome.projection = pca_2d(points, labels);
  } else {
    TsneOptions options;
    options.seed = config.seed;
    outcome.projection = tsne_2d(points, labels, options);
  }
  outcome.projection.params["tokens"] = config.tokens_path.empty() ? "eval-dict" : "token-list";
  outcome.projection.params["joint"] = "true";

  const std::string name = condition_id(spaces.map.meta.target_id, spaces.mode) + "." +
                           std::string(to_string(method));
  outcome.csv_path = output_path(config, name + ".csv").string();
  outcome.svg_path = output_path(config, name + ".svg").string();
  {
    std::ofstream csv(outcome.csv_path, std::ios::binary);
    if (!csv) fail(ErrorKind::IoFailure, "cannot open '" + outcome.csv_path + "' for writing");
    write_projection_csv(outcome.projection, csv);
  }
  {
    std::ofstream svg(outcome.svg_path, std::ios::binary);
    if (!svg) fail(ErrorKind::IoFailure, "cannot open '" + outcome.svg_path + "' for writing");
    svg << render_scatter_svg(outcome.projection, std::string(to_string(method)) + " plot for " + name);
    if (!svg.flush()) fail(ErrorKind::IoFailure, "failed to write '" + outcome.svg_path + "'");
  }
  log << "wrote " << outcome.csv_path << " and " << outcome.svg_path << '\n';
  return outcome;
}

// The 2 x 2 grid: every target embedding under both preprocessing modes,
// unnormalized first. Writes each map and report plus a merged table.tsv.
inline std::vector<EvalReport> run_experiment(const RunConfig& config,
                                              const std::vector<std::string>& target_paths,
                                              std::ostream& table, std::ostream& log) {
  require_path(config.src_embedding_path, "--src-emb");
  require_path(config.train_dict_path, "--train-dict");
  require_path(config.eval_dict_path, "--eval-dict");
  if (target_paths.empty()) fail(ErrorKind::InvalidArgument, "missing required --tgt-emb");
  if (config.mode) fail(ErrorKind::InvalidArgument, "experiment runs both modes; do not pass --mode");

  const BilingualDictionary train = load_dictionary(config.train_dict_path);
  const BilingualDictionary eval = load_dictionary(config.eval_dict_path);
  const Embedding src = load_embedding(config.src_embedding_path, config.max_vocab_src, log);
  const std::string src_id = embedding_id(config.src_embedding_path);

  std::vector<EvalReport> reports;
  for (const auto& path : target_paths) {
    const Embedding tgt = load_embedding(path, config.max_vocab_tgt, log);
    const std::string tgt_id = embedding_id(path);
    for (PreprocessMode mode : {PreprocessMode::None, PreprocessMode::CenterNormalize}) {
      CoverageStats stats;
      const AlignmentMap map = align_loaded(src, tgt, train, mode, src_id, tgt_id, &stats);
      const std::string name = map.meta.extra.at("condition");
      log << name << ": ";
      print_coverage(stats, log);
      save_map(map, output_path(config, name + ".map").string());
      EvalReport report =
          evaluate_loaded(eval, apply_mode(src, mode), apply_mode(tgt, mode), map, config.ks);
      save_report(report, output_path(config, name + ".report.json").string(), ReportFormat::Json);
      save_report(report, output_path(config, name + ".report.tsv").string(), ReportFormat::Tsv);
      reports.push_back(std::move(report));
    }
  }

  std::ostringstream merged;
  write_tsv_header(reports.front().ks, merged);
  for (const auto& r : reports) write_tsv_row(r, merged);
  {
    const std::string path = output_path(config, "table.tsv").string();
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << merged.str()) || !out.flush())
      fail(ErrorKind::IoFailure, "failed to write '" + path + "'");
  }
  table << merged.str();
  return reports;
}

}  // namespace xalign::pipeline
