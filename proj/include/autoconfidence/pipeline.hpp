#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "autoconfidence/cure_model.hpp"
#include "autoconfidence/dataset.hpp"
#include "autoconfidence/embed.hpp"
#include "autoconfidence/eval.hpp"
#include "autoconfidence/forest.hpp"
#include "autoconfidence/ingest.hpp"
#include "autoconfidence/llm_eval.hpp"

namespace autoconfidence::pipeline {

namespace fs = std::filesystem;

struct PipelineConfig {
  CohortConfig cohort;
  bool early_exclusion = true;
  ingest::SearchQuery query;
  std::optional<std::string> remote_config;  // JSON file for RemoteSource

  llm::EvalPromptConfig eval_prompt = llm::placeholder_eval_config();
  llm::BinaryPromptConfig binary_prompt = llm::placeholder_binary_config();
  llm::HttpChatConfig chat;
  std::size_t llm_max_in_flight = 4;

  std::size_t embedding_dims = 4;
  forest::ForestConfig forest;
  cure::FitConfig cure;
  cure::RiskScore risk = cure::RiskScore::IncidenceTimesHazard;
  double risk_horizon = 365.0;

  std::size_t folds = 5;
  int n_boot = 100;
  double level = 0.95;
  std::uint64_t seed = 7;

  void validate() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const fs::path& path);
};

// One row of features.jsonl. Raw inputs are kept so that reducers and
// scalers can be refit inside each cross-validation fold.
struct FeatureRow {
  std::string doi;
  bool label = false;
  long time_days = 1;
  bool event = false;
  llm::EvalScores scores;
  std::vector<double> embedding;
  std::optional<UsageMetrics> usage;
  std::optional<bool> llm_publish;
  std::string feature_set;       // set used for `features`
  std::vector<double> features;  // reduced and assembled for that set
};

nlohmann::ordered_json to_json(const FeatureRow& row);
FeatureRow feature_row_from_json(const nlohmann::ordered_json& j);
std::vector<FeatureRow> read_feature_rows(const fs::path& path);
void write_feature_rows(const fs::path& path, const std::vector<FeatureRow>& rows);

struct ScoreEntry {
  std::string doi;
  llm::EvalScores scores;
  std::optional<bool> publish;
};
nlohmann::ordered_json to_json(const ScoreEntry& e);
ScoreEntry score_entry_from_json(const nlohmann::ordered_json& j);
std::vector<ScoreEntry> read_scores(const fs::path& path);

// Everything needed to turn a FeatureRow into a model input.
struct FeaturePipeline {
  embed::FeatureSet set = embed::FeatureSet::ScoresOnly;
  std::optional<embed::PcaReducer> reducer;
  embed::Scaler scaler;

  static FeaturePipeline fit(const std::vector<const FeatureRow*>& train, embed::FeatureSet set,
                             std::size_t embedding_dims);
  FeatureVector raw(const FeatureRow& row) const;
  FeatureVector transform(const FeatureRow& row) const;
  std::vector<std::string> names() const;
  nlohmann::ordered_json to_json() const;
  static FeaturePipeline from_json(const nlohmann::ordered_json& j);
};

// A fitted model of either kind plus its feature pipeline.
struct TrainedModel {
  std::string kind;  // "cure" or "forest"
  FeaturePipeline features;
  std::optional<cure::CureModelParams> cure;
  std::optional<cure::FitDiagnostics> diagnostics;
  std::optional<forest::Forest> forest;
  cure::RiskScore risk = cure::RiskScore::IncidenceTimesHazard;
  double risk_horizon = 365.0;

  double confidence(const FeatureRow& row) const;
  std::optional<double> risk_of(const FeatureRow& row) const;
  nlohmann::ordered_json to_json() const;
  static TrainedModel from_json(const nlohmann::ordered_json& j);
};

TrainedModel train_model(const std::string& kind, const std::vector<const FeatureRow*>& train,
                         embed::FeatureSet set, const PipelineConfig& cfg);

eval::CrossvalResult crossval_model(const std::vector<FeatureRow>& rows, const std::string& kind,
                                    embed::FeatureSet set, const PipelineConfig& cfg);

// Stages. Each reads and writes only the files it is given.
struct IngestArgs {
  std::string source;
  std::optional<fs::path> terms_file;
  fs::path out;
  bool mock = false;
};
void cmd_ingest(const IngestArgs& args, const PipelineConfig& cfg);

struct ScoreArgs {
  fs::path in;
  fs::path out;
  bool live = false;
  bool binary = true;
};
// Returns the number of articles that failed; their ids go to <out>.failures.json.
std::size_t cmd_score(const ScoreArgs& args, const PipelineConfig& cfg);

struct FeaturizeArgs {
  fs::path cohort;
  fs::path scores;
  fs::path embeddings;
  embed::FeatureSet set = embed::FeatureSet::ScoresEmbUsage;
  fs::path out;
};
void cmd_featurize(const FeaturizeArgs& args, const PipelineConfig& cfg);

struct FitArgs {
  std::string model;
  fs::path features;
  std::optional<embed::FeatureSet> set;  // defaults to the set recorded in the features file
  fs::path out;
};
void cmd_fit(const FitArgs& args, const PipelineConfig& cfg);

struct PredictArgs {
  fs::path model;
  fs::path features;
  fs::path out;
};
void cmd_predict(const PredictArgs& args);

struct EvaluateArgs {
  fs::path features;
  std::vector<std::string> models{"cure", "forest"};
  std::vector<embed::FeatureSet> sets{embed::FeatureSet::ScoresOnly, embed::FeatureSet::ScoresEmb,
                                      embed::FeatureSet::ScoresEmbUsage};
  fs::path out;
};
eval::EvalReport cmd_evaluate(const EvaluateArgs& args, const PipelineConfig& cfg);

struct ReportArgs {
  fs::path in;  // report.json
  std::optional<fs::path> out;
};
std::string cmd_report(const ReportArgs& args);

// Throws ValidationError naming the path when it does not exist.
void require_file(const fs::path& path, const std::string& what);

}  // namespace autoconfidence::pipeline
