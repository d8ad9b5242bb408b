#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "autoconfidence/dataset.hpp"
#include "autoconfidence/llm_eval.hpp"

namespace autoconfidence::embed {

using EmbeddingVector = std::vector<double>;

// Source of precomputed title+abstract embeddings.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::optional<EmbeddingVector> get(const std::string& doi) const = 0;
};

// Reads a JSON object {doi: [floats]}. All vectors must share one length and be finite.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(const std::string& path);
  explicit FileEmbeddingProvider(std::map<std::string, EmbeddingVector> table);

  std::size_t dimension() const override { return dim_; }
  std::optional<EmbeddingVector> get(const std::string& doi) const override;

 private:
  std::map<std::string, EmbeddingVector> table_;
  std::size_t dim_ = 0;
};

// Fixed-width linear summary of an embedding.
class Reducer {
 public:
  virtual ~Reducer() = default;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual std::vector<double> transform(std::span<const double> v) const = 0;
};

// Principal-component reducer. Component signs are fixed so that each
// component's largest-magnitude coordinate is positive.
class PcaReducer final : public Reducer {
 public:
  PcaReducer() = default;
  PcaReducer(Eigen::VectorXd mean, Eigen::MatrixXd components, Eigen::VectorXd explained_variance,
             double total_variance);

  std::size_t input_dim() const override { return static_cast<std::size_t>(mean_.size()); }
  std::size_t output_dim() const override { return static_cast<std::size_t>(components_.cols()); }
  std::vector<double> transform(std::span<const double> v) const override;
  // Inverse map from reduced coordinates back into embedding space.
  std::vector<double> reconstruct(std::span<const double> coords) const;

  bool fitted() const { return fitted_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  // One column per component.
  const Eigen::MatrixXd& components() const { return components_; }
  const Eigen::VectorXd& explained_variance() const { return explained_variance_; }
  Eigen::VectorXd explained_variance_ratio() const;

  nlohmann::ordered_json to_json() const;
  static PcaReducer from_json(const nlohmann::ordered_json& j);

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd components_;
  Eigen::VectorXd explained_variance_;
  double total_variance_ = 0.0;
  bool fitted_ = false;
};

PcaReducer fit_reducer(const std::vector<EmbeddingVector>& train, std::size_t n_components = 4);

enum class FeatureSet { ScoresOnly, ScoresEmb, ScoresEmbUsage };

FeatureSet parse_feature_set(const std::string& name);
std::string to_string(FeatureSet s);
std::size_t feature_count(FeatureSet s, std::size_t embedding_dims = 4);
std::vector<std::string> feature_names(FeatureSet s, std::size_t embedding_dims = 4);

// Ordering: five scores, reduced embedding coordinates, then log1p of abstract
// views, full-text views and PDF downloads, truncated per feature set.
FeatureVector assemble_features(const llm::EvalScores& scores, std::span<const double> reduced,
                                const std::optional<UsageMetrics>& usage, FeatureSet set);

// Per-column z-score with statistics from the training rows only. Zero-variance
// columns are centered and left unscaled.
class Scaler {
 public:
  Scaler() = default;
  Scaler(std::vector<double> mean, std::vector<double> sd) : mean_(std::move(mean)), sd_(std::move(sd)) {}

  static Scaler fit(const std::vector<FeatureVector>& train);
  FeatureVector transform(std::span<const double> row) const;
  std::vector<FeatureVector> transform(const std::vector<FeatureVector>& rows) const;

  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& sd() const { return sd_; }

  nlohmann::ordered_json to_json() const;
  static Scaler from_json(const nlohmann::ordered_json& j);

 private:
  std::vector<double> mean_;
  std::vector<double> sd_;
};

std::pair<Scaler, std::vector<FeatureVector>> standardize(const std::vector<FeatureVector>& train,
                                                          const std::vector<FeatureVector>& apply_to);

}  // namespace autoconfidence::embed
