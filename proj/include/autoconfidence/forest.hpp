#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "autoconfidence/dataset.hpp"

namespace autoconfidence::forest {

struct ForestConfig {
  int n_trees = 500;
  int max_depth = 0;  // 0 = unlimited
  int min_leaf = 1;
  int mtry = 0;       // 0 = ceil(sqrt(p))
  std::uint64_t seed = 1;
  bool bootstrap = true;  // false trains every tree on the full sample
  int threads = 0;        // 0 = hardware concurrency

  // mtry resolved against p features; throws on invalid settings.
  int resolved_mtry(std::size_t p) const;
  void validate(std::size_t p) const;
};

// Flat binary tree. Leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::uint32_t count0 = 0;
  std::uint32_t count1 = 0;

  bool is_leaf() const { return feature < 0; }
};

class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  // Fraction of class-1 training rows in the leaf reached by x.
  double predict_proba(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }

 private:
  std::vector<TreeNode> nodes_;
};

// Gini impurity 1 - sum p_k^2 of a two-class count vector.
double gini(std::size_t count0, std::size_t count1);

// Row indices of a bootstrap resample of n rows (with replacement, n draws).
std::vector<std::size_t> draw_bootstrap(std::size_t n, std::uint64_t seed);

class Forest {
 public:
  Forest() = default;
  Forest(ForestConfig cfg, std::size_t n_features, std::vector<Tree> trees)
      : cfg_(cfg), n_features_(n_features), trees_(std::move(trees)) {}

  double predict_proba(std::span<const double> x) const;
  bool predict_label(std::span<const double> x) const { return predict_proba(x) >= 0.5; }

  const std::vector<Tree>& trees() const { return trees_; }
  const ForestConfig& config() const { return cfg_; }
  std::size_t n_features() const { return n_features_; }
  // Number of internal nodes splitting on each feature, summed over trees.
  std::vector<std::size_t> split_counts() const;

  nlohmann::ordered_json to_json() const;
  static Forest from_json(const nlohmann::ordered_json& j);

 private:
  ForestConfig cfg_;
  std::size_t n_features_ = 0;
  std::vector<Tree> trees_;
};

// CART trees on bootstrap resamples; each node takes the best Gini split over
// mtry randomly drawn features (more are drawn if all drawn features are constant).
// Ties in gain go to the lowest feature index, then the lowest threshold.
Forest fit_forest(const std::vector<FeatureVector>& features, const std::vector<bool>& labels,
                  const ForestConfig& cfg);

}  // namespace autoconfidence::forest
