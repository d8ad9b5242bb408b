#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "autoconfidence/dataset.hpp"
#include "autoconfidence/llm_eval.hpp"

namespace autoconfidence::eval {

// Mann-Whitney AUROC: (concordant + tied/2) / (n1 n0). Throws if one class is absent.
double auroc(std::span<const double> scores, const std::vector<bool>& labels);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};
std::vector<RocPoint> roc_curve(std::span<const double> scores, const std::vector<bool>& labels);

// Harrell's C: pair (i, j) is comparable when t_i < t_j and i had the event;
// concordant when risk_i > risk_j; risk ties count one half.
double c_index(std::span<const double> risk, std::span<const double> times, const std::vector<bool>& events);

double accuracy(std::span<const double> scores, const std::vector<bool>& labels, double threshold = 0.5);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Linear-interpolation sample quantile (R type 7).
double quantile(std::vector<double> values, double q);

// Metric evaluated on a resample given as row indices. It may throw
// ValidationError for a degenerate resample, which is then redrawn.
using ResampleMetric = std::function<double(const std::vector<std::size_t>&)>;

// Percentile bootstrap interval. Gives up after 10 * n_boot draws.
Interval bootstrap_ci(const ResampleMetric& metric, std::size_t n, int n_boot = 100, double level = 0.95,
                      std::uint64_t seed = 0);

struct MetricCI {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct ReportRow {
  std::string model;        // "forest" or "cure"
  std::string feature_set;  // "scores", "scores_emb", "scores_emb_usage"
  std::optional<MetricCI> auroc;
  std::optional<MetricCI> c_index;
  std::optional<double> accuracy;
  std::vector<RocPoint> roc;
};

struct GroupComparison {
  std::string dimension;
  double mean_published = 0.0;
  double mean_unpublished = 0.0;
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;

  // "Depth of Research: 7.42 vs 6.31"
  std::string render() const;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::optional<double> llm_direct_accuracy;
  std::string llm_direct_name = "GPT-4o";
  std::vector<GroupComparison> group_comparison;
  std::uint64_t seed = 0;
  int folds = 5;
  int n_boot = 100;
  double level = 0.95;
};

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

// Two-sided Welch unequal-variance t-test.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

std::vector<GroupComparison> group_compare(const std::vector<llm::EvalScores>& published,
                                           const std::vector<llm::EvalScores>& unpublished);

// "AUROC = 0.747 (95% CI: 0.716-0.774)"
std::string format_metric(const std::string& name, const MetricCI& m, double level = 0.95);

// Per-model metric lists followed by the accuracy grid; "-" marks cells that were not evaluated.
std::string render_report(const EvalReport& report);
std::string render_accuracy_table(const EvalReport& report);

nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::ordered_json& j);

struct FoldPrediction {
  std::vector<double> scores;  // probability of publication, one per test row
  std::vector<double> risks;   // optional concordance risk, one per test row
};

// Fits on `train` rows and scores `test` rows.
using FitPredict = std::function<FoldPrediction(const Fold& train, const Fold& test, std::size_t fold)>;

struct CrossvalData {
  std::vector<bool> labels;
  std::vector<double> times;   // needed for c_index
  std::vector<bool> events;    // needed for c_index
};

struct CrossvalResult {
  std::vector<double> oof_scores;
  std::vector<double> oof_risks;
  std::vector<std::size_t> fold_of;
  ReportRow row;
};

// Stratified k-fold evaluation. Each observation is scored exactly once, by
// the model that did not see it. AUROC, C-index and accuracy are computed on
// the pooled out-of-fold predictions, with bootstrap intervals over those.
CrossvalResult crossval(const CrossvalData& data, const FitPredict& fit_predict, std::size_t k,
                        std::uint64_t seed, int n_boot = 100, double level = 0.95);

}  // namespace autoconfidence::eval
