// autoconfidence: command-line driver for the preprint confidence pipeline.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "autoconfidence/error.hpp"
#include "autoconfidence/pipeline.hpp"

namespace ac = autoconfidence;
namespace pl = autoconfidence::pipeline;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preprint publication confidence pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::int64_t seed = -1;
  bool mock = false;
  app.add_option("--config", config_path, "Pipeline config (JSON)");
  app.add_option("--seed", seed, "Global seed (overrides config)");
  app.add_flag("--mock", mock, "Use fixtures and the mock LLM only");

  pl::IngestArgs ingest_args;
  std::string terms_file;
  auto* ingest = app.add_subcommand("ingest", "Harvest matching preprints and their metadata");
  ingest->add_option("--source", ingest_args.source, "Fixture directory or API base URL")->required();
  ingest->add_option("--terms-file", terms_file, "Search terms, one per line");
  ingest->add_option("--out", ingest_args.out, "Output cohort JSONL")->required();

  pl::ScoreArgs score_args;
  bool live = false;
  auto* score = app.add_subcommand("score", "Score articles with the LLM evaluator");
  score->add_option("--in", score_args.in, "Cohort JSONL")->required();
  score->add_option("--out", score_args.out, "Output scores JSONL")->required();
  score->add_flag("--live", live, "Call the configured chat-completion endpoint");
  score->add_flag("!--no-binary", score_args.binary, "Skip the direct publish/not-publish prompt");

  pl::FeaturizeArgs feat_args;
  std::string feat_set = "scores_emb_usage";
  auto* featurize = app.add_subcommand("featurize", "Label the cohort and assemble features");
  featurize->add_option("--cohort", feat_args.cohort, "Cohort JSONL")->required();
  featurize->add_option("--scores", feat_args.scores, "Scores JSONL")->required();
  featurize->add_option("--embeddings", feat_args.embeddings, "Embedding JSON map doi -> vector");
  featurize->add_option("--set", feat_set, "scores | scores_emb | scores_emb_usage");
  featurize->add_option("--out", feat_args.out, "Output features JSONL")->required();

  pl::FitArgs fit_args;
  std::string fit_set;
  auto* fit = app.add_subcommand("fit", "Fit a model on a features file");
  fit->add_option("--model", fit_args.model, "cure | forest")->required();
  fit->add_option("--features,--in", fit_args.features, "Features JSONL")->required();
  fit->add_option("--set", fit_set, "Feature set (defaults to the one in the features file)");
  fit->add_option("--out", fit_args.out, "Output model JSON")->required();

  pl::PredictArgs pred_args;
  auto* predict = app.add_subcommand("predict", "Confidence scores per DOI from a fitted model");
  predict->add_option("--model", pred_args.model, "Model JSON")->required();
  predict->add_option("--features,--in", pred_args.features, "Features JSONL")->required();
  predict->add_option("--out", pred_args.out, "Output predictions JSONL")->required();

  pl::EvaluateArgs eval_args;
  std::string models = "cure,forest", sets = "scores,scores_emb,scores_emb_usage";
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validated evaluation and report");
  evaluate->add_option("--features,--in", eval_args.features, "Features JSONL")->required();
  evaluate->add_option("--models", models, "Comma-separated model list");
  evaluate->add_option("--sets", sets, "Comma-separated feature sets");
  evaluate->add_option("--out", eval_args.out, "Report directory")->required();

  pl::ReportArgs report_args;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Render a saved report.json as text");
  report->add_option("--in", report_args.in, "report.json")->required();
  report->add_option("--out", report_out, "Write the text here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    pl::PipelineConfig cfg = config_path.empty() ? pl::PipelineConfig{} : pl::PipelineConfig::load(config_path);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);

    if (*ingest) {
      if (!terms_file.empty()) ingest_args.terms_file = terms_file;
      ingest_args.mock = mock;
      pl::cmd_ingest(ingest_args, cfg);
    } else if (*score) {
      if (live && mock) throw ac::ValidationError("--live and --mock are mutually exclusive");
      score_args.live = live;
      const auto failed = pl::cmd_score(score_args, cfg);
      if (failed > 0) std::cerr << failed << " LLM request(s) failed; see the failures manifest\n";
    } else if (*featurize) {
      feat_args.set = ac::embed::parse_feature_set(feat_set);
      pl::cmd_featurize(feat_args, cfg);
    } else if (*fit) {
      if (!fit_set.empty()) fit_args.set = ac::embed::parse_feature_set(fit_set);
      pl::cmd_fit(fit_args, cfg);
    } else if (*predict) {
      pl::cmd_predict(pred_args);
    } else if (*evaluate) {
      eval_args.models = split_list(models);
      eval_args.sets.clear();
      for (const auto& s : split_list(sets)) eval_args.sets.push_back(ac::embed::parse_feature_set(s));
      const auto rep = pl::cmd_evaluate(eval_args, cfg);
      std::cout << ac::eval::render_report(rep);
    } else if (*report) {
      if (!report_out.empty()) report_args.out = report_out;
      const auto text = pl::cmd_report(report_args);
      if (!report_args.out) std::cout << text;
    }
  } catch (const ac::TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
