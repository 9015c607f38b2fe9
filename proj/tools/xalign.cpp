// xalign: align two word-embedding spaces with orthogonal Procrustes on a
// bilingual dictionary, then translate, evaluate precision@k and plot.
//
//   xalign align      --src-emb en.vec --tgt-emb yo.vec --train-dict train.txt [--mode ...]
//   xalign evaluate   --src-emb ... --tgt-emb ... --eval-dict eval.txt --map M [--k 1 --k 5]
//   xalign translate  --src-emb ... --tgt-emb ... --map M --query sea [--query-file F] [--k 10]
//   xalign plot       --src-emb ... --tgt-emb ... --map M --method tsne --eval-dict eval.txt
//   xalign experiment --src-emb en.vec --tgt-emb wiki.vec --tgt-emb curated.vec ...
//
// Failures print "<Category>: <message>" on one line of stderr and exit 1
// (usage errors exit 2).

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xalign/pipeline.hpp"

namespace {

using xalign::pipeline::RunConfig;

struct Flags {
  std::vector<std::string> tgt_embs;
  std::string mode;
  std::vector<std::size_t> ks;
  std::string map_path;
  std::string method = "pca";
  std::vector<std::string> queries;
  std::string query_file;
};

void add_common(CLI::App* cmd, RunConfig& config, Flags& flags, bool multi_target = false) {
  cmd->add_option("--src-emb", config.src_embedding_path, "Source embedding (.vec text format)");
  if (multi_target)
    cmd->add_option("--tgt-emb", flags.tgt_embs, "Target embedding; repeat for each target");
  else
    cmd->add_option("--tgt-emb", config.tgt_embedding_path, "Target embedding (.vec text format)");
  cmd->add_option("--mode", flags.mode, "Preprocessing: none | center-normalize")
      ->check(CLI::IsMember({"none", "center-normalize", "center_normalize"}));
  cmd->add_option("--max-vocab-src", config.max_vocab_src, "Keep only the first N source rows")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-vocab-tgt", config.max_vocab_tgt, "Keep only the first N target rows")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out-dir", config.out_dir, "Directory for maps, reports and plots");
  cmd->add_option("--seed", config.seed, "RNG seed (t-SNE initialization)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual embedding alignment with orthogonal Procrustes"};
  app.require_subcommand(1);

  RunConfig config;
  Flags flags;

  auto* align = app.add_subcommand("align", "Fit the alignment map on a training dictionary");
  add_common(align, config, flags);
  align->add_option("--train-dict", config.train_dict_path, "Training dictionary")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Precision@k against an evaluation dictionary");
  add_common(evaluate, config, flags);
  evaluate->add_option("--eval-dict", config.eval_dict_path, "Evaluation dictionary")->required();
  evaluate->add_option("--map", flags.map_path, "Alignment map file")->required();
  evaluate->add_option("--k", flags.ks, "k value; repeatable (default 1 5 10)")->check(CLI::PositiveNumber);

  auto* translate = app.add_subcommand("translate", "Nearest target words for source queries");
  add_common(translate, config, flags);
  translate->add_option("--map", flags.map_path, "Alignment map file")->required();
  translate->add_option("--query", flags.queries, "Source word; repeatable");
  translate->add_option("--query-file", flags.query_file, "File with one source word per line");
  translate->add_option("--k", flags.ks, "Number of candidates (default 10)")->check(CLI::PositiveNumber);

  auto* plot = app.add_subcommand("plot", "2D projection of the aligned spaces (CSV + SVG)");
  add_common(plot, config, flags);
  plot->add_option("--map", flags.map_path, "Alignment map file")->required();
  plot->add_option("--method", flags.method, "pca | tsne")->check(CLI::IsMember({"pca", "tsne"}));
  plot->add_option("--eval-dict", config.eval_dict_path, "Plot the words of this dictionary");
  plot->add_option("--tokens", config.tokens_path, "Token list: '<src|tgt> <token>' per line");

  auto* experiment = app.add_subcommand("experiment", "Full grid: each target x {unnorm, norm}");
  add_common(experiment, config, flags, true);
  experiment->add_option("--train-dict", config.train_dict_path, "Training dictionary")->required();
  experiment->add_option("--eval-dict", config.eval_dict_path, "Evaluation dictionary")->required();
  experiment->add_option("--k", flags.ks, "k value; repeatable (default 1 5 10)")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "UsageError: " << e.what() << '\n';
    return 2;
  }

  try {
    if (!flags.mode.empty()) config.mode = xalign::parse_preprocess_mode(flags.mode);
    if (!flags.ks.empty()) config.ks = xalign::normalize_ks(flags.ks);

    if (*align) {
      xalign::pipeline::run_align(config, std::cerr);
    } else if (*evaluate) {
      xalign::pipeline::run_evaluate(config, flags.map_path, std::cerr);
    } else if (*translate) {
      std::vector<std::string> queries = flags.queries;
      if (!flags.query_file.empty()) {
        auto more = xalign::pipeline::read_query_file(flags.query_file);
        queries.insert(queries.end(), more.begin(), more.end());
      }
      if (queries.empty()) xalign::fail(xalign::ErrorKind::InvalidArgument, "no --query or --query-file given");
      const std::size_t k = flags.ks.empty() ? 10 : flags.ks.front();
      xalign::pipeline::run_translate(config, flags.map_path, queries, k, std::cout, std::cerr);
    } else if (*plot) {
      const auto method = flags.method == "tsne" ? xalign::ProjectionMethod::Tsne : xalign::ProjectionMethod::Pca;
      xalign::pipeline::run_plot(config, flags.map_path, method, std::cerr);
    } else if (*experiment) {
      xalign::pipeline::run_experiment(config, flags.tgt_embs, std::cout, std::cerr);
    }
  } catch (const xalign::Error& e) {
    std::cerr << xalign::to_string(e.kind()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "InternalError: " << e.what() << '\n';
    return 1;
  }
  std::cout.flush();
  if (!std::cout) {
    std::cerr << "IoFailure: failed to write to standard output\n";
    return 1;
  }
  return 0;
}
