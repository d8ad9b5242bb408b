#include "autoconfidence/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "autoconfidence/error.hpp"
#include "autoconfidence/rng.hpp"

namespace autoconfidence::forest {

int ForestConfig::resolved_mtry(std::size_t p) const {
  return mtry > 0 ? mtry : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
}

void ForestConfig::validate(std::size_t p) const {
  if (n_trees < 1) throw ValidationError("forest: n_trees must be at least 1");
  if (min_leaf < 1) throw ValidationError("forest: min_leaf must be at least 1");
  if (max_depth < 0) throw ValidationError("forest: max_depth must be nonnegative");
  const int m = resolved_mtry(p);
  if (m < 1 || static_cast<std::size_t>(m) > p)
    throw ValidationError("forest: mtry must lie in [1, " + std::to_string(p) + "]");
}

double gini(std::size_t count0, std::size_t count1) {
  const double n = static_cast<double>(count0 + count1);
  if (n == 0.0) return 0.0;
  const double p0 = static_cast<double>(count0) / n, p1 = static_cast<double>(count1) / n;
  return 1.0 - (p0 * p0 + p1 * p1);
}

std::vector<std::size_t> draw_bootstrap(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = uniform_index(rng, n);
  return rows;
}

double Tree::predict_proba(std::span<const double> x) const {
  if (nodes_.empty()) throw ValidationError("tree: empty");
  int i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  const auto& leaf = nodes_[static_cast<std::size_t>(i)];
  return static_cast<double>(leaf.count1) / static_cast<double>(leaf.count0 + leaf.count1);
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<FeatureVector>& x, const std::vector<bool>& y, const ForestConfig& cfg,
              std::uint64_t seed)
      : x_(x), y_(y), cfg_(cfg), p_(x.front().size()), mtry_(cfg.resolved_mtry(p_)), rng_(seed) {}

  Tree build(std::vector<std::size_t> rows) {
    nodes_.clear();
    grow(rows, 0);
    return Tree(std::move(nodes_));
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    // Weighted child impurity score sum_k c_k^2 / n over both children, kept as an exact
    // fraction num/den so that equal scores compare equal; larger is better.
    unsigned __int128 num = 0;
    unsigned __int128 den = 1;
  };

  int grow(std::vector<std::size_t>& rows, int depth) {
    std::uint32_t c1 = 0;
    for (auto r : rows) c1 += y_[r] ? 1 : 0;
    const auto c0 = static_cast<std::uint32_t>(rows.size()) - c1;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{-1, 0.0, -1, -1, c0, c1});

    const bool pure = c0 == 0 || c1 == 0;
    const bool depth_cap = cfg_.max_depth > 0 && depth >= cfg_.max_depth;
    if (pure || depth_cap || rows.size() < 2 * static_cast<std::size_t>(cfg_.min_leaf)) return id;

    const Split best = find_split(rows);
    if (best.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_[r][static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  Split find_split(const std::vector<std::size_t>& rows) {
    // Random feature order; stop once mtry non-constant features were examined.
    std::vector<int> order(p_);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < p_; ++i) {
      const std::size_t j = i + uniform_index(rng_, p_ - i);
      std::swap(order[i], order[j]);
    }

    Split best;
    int examined = 0;
    std::vector<std::pair<double, bool>> vals(rows.size());
    for (std::size_t k = 0; k < p_ && examined < mtry_; ++k) {
      const int f = order[k];
      for (std::size_t i = 0; i < rows.size(); ++i)
        vals[i] = {x_[rows[i]][static_cast<std::size_t>(f)], static_cast<bool>(y_[rows[i]])};
      std::sort(vals.begin(), vals.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      if (vals.front().first == vals.back().first) continue;
      ++examined;
      scan(f, vals, best);
    }
    return best;
  }

  void scan(int feature, const std::vector<std::pair<double, bool>>& vals, Split& best) const {
    const std::size_t n = vals.size();
    std::size_t total1 = 0;
    for (const auto& v : vals) total1 += v.second ? 1 : 0;
    const std::size_t total0 = n - total1;
    const auto min_leaf = static_cast<std::size_t>(cfg_.min_leaf);

    std::size_t l0 = 0, l1 = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      (vals[i].second ? l1 : l0) += 1;
      if (vals[i].first == vals[i + 1].first) continue;
      const std::size_t nl = i + 1, nr = n - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const std::size_t r0 = total0 - l0, r1 = total1 - l1;
      // Minimizing n_L gini_L + n_R gini_R is maximizing this.
      using u128 = unsigned __int128;
      const Split cand{feature, vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0,
                       u128(l0 * l0 + l1 * l1) * nr + u128(r0 * r0 + r1 * r1) * nl, u128(nl) * nr};
      if (better(cand, best)) best = cand;
    }
  }

  static bool better(const Split& c, const Split& best) {
    if (best.feature < 0) return true;
    const auto lhs = c.num * best.den, rhs = best.num * c.den;
    if (lhs != rhs) return lhs > rhs;
    if (c.feature != best.feature) return c.feature < best.feature;
    return c.threshold < best.threshold;
  }

  const std::vector<FeatureVector>& x_;
  const std::vector<bool>& y_;
  const ForestConfig& cfg_;
  std::size_t p_;
  int mtry_;
  Rng rng_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

double Forest::predict_proba(std::span<const double> x) const {
  if (trees_.empty()) throw ValidationError("forest: not fitted");
  if (x.size() != n_features_)
    throw ValidationError("forest: expected " + std::to_string(n_features_) + " features, got " + std::to_string(x.size()));
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict_proba(x);
  return sum / static_cast<double>(trees_.size());
}

std::vector<std::size_t> Forest::split_counts() const {
  std::vector<std::size_t> counts(n_features_, 0);
  for (const auto& t : trees_)
    for (const auto& node : t.nodes())
      if (!node.is_leaf()) ++counts[static_cast<std::size_t>(node.feature)];
  return counts;
}

Forest fit_forest(const std::vector<FeatureVector>& features, const std::vector<bool>& labels,
                  const ForestConfig& cfg) {
  if (features.size() != labels.size()) throw ValidationError("fit_forest: features and labels differ in length");
  if (features.size() < 2) throw ValidationError("fit_forest: need at least 2 samples");
  const std::size_t p = features.front().size();
  if (p == 0) throw ValidationError("fit_forest: no features");
  for (const auto& row : features) {
    if (row.size() != p) throw ValidationError("fit_forest: ragged feature rows");
    for (double v : row)
      if (!std::isfinite(v)) throw ValidationError("fit_forest: missing or non-finite feature value");
  }
  const auto positives = std::count(labels.begin(), labels.end(), true);
  if (positives == 0 || positives == static_cast<long>(labels.size()))
    throw ValidationError("fit_forest: labels contain a single class");
  cfg.validate(p);

  const auto n_trees = static_cast<std::size_t>(cfg.n_trees);
  std::vector<Tree> trees(n_trees);
  auto train_one = [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(cfg.seed, t);
    std::vector<std::size_t> rows;
    if (cfg.bootstrap) {
      rows = draw_bootstrap(features.size(), derive_seed(tree_seed, 1));
    } else {
      rows.resize(features.size());
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeBuilder builder(features, labels, cfg, derive_seed(tree_seed, 2));
    trees[t] = builder.build(std::move(rows));
  };

  std::size_t threads = cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n_trees);
  if (threads <= 1) {
    for (std::size_t t = 0; t < n_trees; ++t) train_one(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < n_trees; t = next++) train_one(t);
      });
    for (auto& th : pool) th.join();
  }
  return Forest(cfg, p, std::move(trees));
}

nlohmann::ordered_json Forest::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = "forest";
  j["config"] = {{"n_trees", cfg_.n_trees}, {"max_depth", cfg_.max_depth}, {"min_leaf", cfg_.min_leaf},
                 {"mtry", cfg_.mtry},       {"seed", cfg_.seed},           {"bootstrap", cfg_.bootstrap}};
  j["n_features"] = n_features_;
  j["trees"] = nlohmann::ordered_json::array();
  for (const auto& t : trees_) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes()) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.count0, n.count1});
    j["trees"].push_back(std::move(nodes));
  }
  return j;
}

Forest Forest::from_json(const nlohmann::ordered_json& j) {
  try {
    ForestConfig cfg;
    const auto& c = j.at("config");
    cfg.n_trees = c.at("n_trees").get<int>();
    cfg.max_depth = c.at("max_depth").get<int>();
    cfg.min_leaf = c.at("min_leaf").get<int>();
    cfg.mtry = c.at("mtry").get<int>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    cfg.bootstrap = c.at("bootstrap").get<bool>();
    const auto p = j.at("n_features").get<std::size_t>();
    std::vector<Tree> trees;
    for (const auto& tj : j.at("trees")) {
      std::vector<TreeNode> nodes;
      for (const auto& nj : tj) {
        TreeNode n{nj.at(0).get<int>(), nj.at(1).get<double>(), nj.at(2).get<int>(), nj.at(3).get<int>(),
                   nj.at(4).get<std::uint32_t>(), nj.at(5).get<std::uint32_t>()};
        nodes.push_back(n);
      }
      const auto count = static_cast<int>(nodes.size());
      for (const auto& n : nodes) {
        if (n.is_leaf() ? n.count0 + n.count1 == 0
                        : (n.feature >= static_cast<int>(p) || n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count))
          throw ParseError("forest: malformed tree node");
      }
      trees.emplace_back(std::move(nodes));
    }
    return Forest(cfg, p, std::move(trees));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed forest: ") + e.what());
  }
}

}  // namespace autoconfidence::forest
