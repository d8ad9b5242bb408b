#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "autoconfidence/error.hpp"
#include "autoconfidence/pipeline.hpp"
#include "autoconfidence/rng.hpp"

using namespace autoconfidence;
using namespace autoconfidence::pipeline;

namespace {

const fs::path kFixture = AC_FIXTURE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("ac_pipeline_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

PipelineConfig quick_config() {
  PipelineConfig c;
  c.forest.n_trees = 60;
  c.n_boot = 20;
  return c;
}

// ingest -> score -> featurize into dir; returns the features path.
fs::path run_front(const fs::path& dir, const PipelineConfig& cfg) {
  cmd_ingest({kFixture.string(), kFixture / "terms.txt", dir / "cohort.jsonl", true}, cfg);
  cmd_score({dir / "cohort.jsonl", dir / "scores.jsonl", false, true}, cfg);
  cmd_featurize({dir / "cohort.jsonl", dir / "scores.jsonl", kFixture / "embeddings.json",
                 embed::FeatureSet::ScoresEmbUsage, dir / "features.jsonl"},
                cfg);
  return dir / "features.jsonl";
}

FeatureRow synthetic_row(int i, std::mt19937_64& g) {
  std::uniform_int_distribution<int> s(1, 10);
  std::normal_distribution<double> z;
  FeatureRow r;
  r.doi = "10.1101/syn." + std::to_string(i);
  r.scores = llm::EvalScores::from_values({s(g), s(g), s(g), s(g), s(g)});
  r.label = r.scores.originality + z(g) * 2 > 5.5;
  r.event = r.label;
  r.time_days = r.label ? 30 + i % 200 : 400;
  r.feature_set = "scores";
  return r;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = PipelineConfig::from_json(nlohmann::json::parse(R"({
    "seed": 11,
    "cohort": {"posted_cutoff": "2023-06-01", "min_impact_factor": 3.5, "required_quartile": "Q2",
               "early_exclusion": false},
    "llm": {"model": "m", "temperature": 0.2, "max_retries": 1, "max_in_flight": 2},
    "features": {"embedding_dims": 3},
    "forest": {"n_trees": 20, "mtry": 2},
    "cure": {"risk_score": "hazard_only", "risk_horizon": 180},
    "eval": {"folds": 4, "n_boot": 30, "level": 0.9}
  })"));
  CHECK(c.seed == 11);
  CHECK(c.cohort.posted_cutoff == make_date(2023, 6, 1));
  CHECK(c.cohort.min_impact_factor == 3.5);
  CHECK(c.cohort.required_quartile == Quartile::Q2);
  CHECK_FALSE(c.early_exclusion);
  CHECK(c.eval_prompt.model_name == "m");
  CHECK(c.binary_prompt.max_retries == 1);
  CHECK(c.llm_max_in_flight == 2);
  CHECK(c.embedding_dims == 3);
  CHECK(c.forest.n_trees == 20);
  CHECK(c.risk == cure::RiskScore::HazardOnly);
  CHECK(c.risk_horizon == 180);
  CHECK(c.folds == 4);
  CHECK(c.level == 0.9);

  CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"eval": {"folds": "five"}})")),
                  ValidationError);
  CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"features": {"embedding_dims": 0}})")),
                  ValidationError);
  CHECK_THROWS_AS(PipelineConfig::load("/nonexistent/config.json"), ValidationError);
}

TEST_CASE("missing inputs name the path") {
  const auto cfg = quick_config();
  try {
    cmd_fit({"forest", "/nonexistent/features.jsonl", std::nullopt, "/tmp/x.json"}, cfg);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/features.jsonl") != std::string::npos);
  }
  CHECK_THROWS_AS(cmd_score({"/nonexistent/cohort.jsonl", "/tmp/s.jsonl", false, true}, cfg), ValidationError);
  CHECK_THROWS_AS(cmd_ingest({"/nonexistent/dir", std::nullopt, "/tmp/c.jsonl", true}, cfg), ValidationError);
  CHECK_THROWS_AS(cmd_report({"/nonexistent/report.json", std::nullopt}), ValidationError);
}

TEST_CASE("live scoring needs the api key") {
  TempDir dir("live");
  auto cfg = quick_config();
  cfg.chat.api_key_env = "AC_TEST_SURELY_UNSET_KEY";
  ::unsetenv("AC_TEST_SURELY_UNSET_KEY");
  cmd_ingest({kFixture.string(), std::nullopt, dir.path / "cohort.jsonl", true}, cfg);
  CHECK_THROWS_AS(cmd_score({dir.path / "cohort.jsonl", dir.path / "s.jsonl", true, true}, cfg), ValidationError);
}

TEST_CASE("fixture stages") {
  TempDir dir("stages");
  const auto cfg = quick_config();
  const auto features = run_front(dir.path, cfg);

  const auto cohort = slurp(dir.path / "cohort.jsonl");
  CHECK(std::count(cohort.begin(), cohort.end(), '\n') == 45);
  CHECK(slurp(dir.path / "scores.failures.json") == "[]\n");
  const auto entries = read_scores(dir.path / "scores.jsonl");
  CHECK(entries.size() == 45);
  for (const auto& e : entries) CHECK(e.publish.has_value());

  const auto rows = read_feature_rows(features);
  REQUIRE(rows.size() == 40);
  CHECK(std::count_if(rows.begin(), rows.end(), [](const FeatureRow& r) { return r.label; }) == 14);
  for (const auto& r : rows) {
    CHECK(r.features.size() == 5 + cfg.embedding_dims + 3);
    CHECK(r.time_days >= 1);
    CHECK(r.event == r.label);
  }
  CHECK(fs::exists(dir.path / "features.skipped.json"));
  CHECK(fs::exists(dir.path / "features.reducer.json"));

  cmd_fit({"forest", features, std::nullopt, dir.path / "forest.json"}, cfg);
  cmd_fit({"cure", features, embed::FeatureSet::ScoresOnly, dir.path / "cure.json"}, cfg);
  cmd_predict({dir.path / "cure.json", features, dir.path / "pred.jsonl"});
  const auto pred = slurp(dir.path / "pred.jsonl");
  CHECK(std::count(pred.begin(), pred.end(), '\n') == 40);
  CHECK(pred.find("\"risk\"") != std::string::npos);

  EvaluateArgs ev;
  ev.features = features;
  ev.out = dir.path / "report";
  const auto report = cmd_evaluate(ev, cfg);
  CHECK(report.rows.size() == 6);
  for (const auto& row : report.rows) {
    REQUIRE(row.auroc);
    CHECK(row.auroc->lo <= row.auroc->value);
    CHECK(row.auroc->value <= row.auroc->hi);
    CHECK(row.c_index.has_value() == (row.model == "cure"));
    CHECK(fs::exists(ev.out / ("roc_" + row.model + "_" + row.feature_set + ".csv")));
  }
  CHECK(report.llm_direct_accuracy.has_value());
  CHECK(report.group_comparison.size() == 5);
  const auto text = cmd_report({ev.out / "report.json", std::nullopt});
  CHECK(text == slurp(ev.out / "report.txt"));
}

TEST_CASE("reruns are byte-identical") {
  TempDir a("rerun_a"), b("rerun_b");
  const auto cfg = quick_config();
  for (const auto* d : {&a, &b}) {
    const auto features = run_front(d->path, cfg);
    cmd_fit({"forest", features, std::nullopt, d->path / "forest.json"}, cfg);
    EvaluateArgs ev;
    ev.features = features;
    ev.sets = {embed::FeatureSet::ScoresOnly};
    ev.out = d->path / "report";
    cmd_evaluate(ev, cfg);
  }
  for (const char* f : {"cohort.jsonl", "scores.jsonl", "features.jsonl", "forest.json", "report/report.json",
                        "report/report.txt", "report/roc_cure_scores.csv"})
    CHECK_MESSAGE(slurp(a.path / f) == slurp(b.path / f), f);
}

TEST_CASE("cross-validation refits the scaler inside each fold") {
  std::mt19937_64 g(5);
  std::vector<FeatureRow> rows;
  for (int i = 0; i < 60; ++i) rows.push_back(synthetic_row(i, g));
  // a block of extreme scores shifts the global mean away from any fold's
  for (int i = 0; i < 6; ++i) rows[i].scores = llm::EvalScores::from_values({10, 10, 10, 10, 10});

  auto cfg = quick_config();
  cfg.n_boot = 10;
  const auto res = crossval_model(rows, "cure", embed::FeatureSet::ScoresOnly, cfg);

  std::vector<bool> labels;
  for (const auto& r : rows) labels.push_back(r.label);
  std::vector<const FeatureRow*> all;
  for (const auto& r : rows) all.push_back(&r);
  const auto global = FeaturePipeline::fit(all, embed::FeatureSet::ScoresOnly, cfg.embedding_dims);

  const auto folds = kfold_split(labels, cfg.folds, cfg.seed);
  bool any_differs = false;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<const FeatureRow*> train;
    for (std::size_t h = 0; h < folds.size(); ++h)
      if (h != f)
        for (auto i : folds[h]) train.push_back(&rows[i]);
    std::sort(train.begin(), train.end());
    const auto model = train_model("cure", train, embed::FeatureSet::ScoresOnly, cfg);
    any_differs |= model.features.scaler.mean() != global.scaler.mean();
    for (auto i : folds[f]) CHECK(res.oof_scores[i] == model.confidence(rows[i]));
  }
  CHECK(any_differs);
}

TEST_CASE("feature rows and models round trip through json") {
  std::mt19937_64 g(9);
  std::vector<FeatureRow> rows;
  for (int i = 0; i < 40; ++i) rows.push_back(synthetic_row(i, g));
  rows[0].usage = UsageMetrics{10, 5, 2};
  rows[1].llm_publish = true;
  for (const auto& r : rows) CHECK(to_json(feature_row_from_json(to_json(r))).dump() == to_json(r).dump());

  std::vector<const FeatureRow*> all;
  for (const auto& r : rows) all.push_back(&r);
  auto cfg = quick_config();
  for (const std::string kind : {"forest", "cure"}) {
    const auto m = train_model(kind, all, embed::FeatureSet::ScoresOnly, cfg);
    const auto back = TrainedModel::from_json(nlohmann::ordered_json::parse(m.to_json().dump()));
    CHECK(back.to_json().dump() == m.to_json().dump());
    for (const auto& r : rows) CHECK(back.confidence(r) == m.confidence(r));
  }
  CHECK_THROWS_AS(train_model("svm", all, embed::FeatureSet::ScoresOnly, cfg), ValidationError);
}
