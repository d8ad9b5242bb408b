#include <doctest.h>

#include <random>
#include <set>

#include "autoconfidence/error.hpp"
#include "autoconfidence/forest.hpp"
#include "support/oracles.hpp"

using namespace autoconfidence;
using namespace autoconfidence::forest;

namespace {

struct Data {
  std::vector<FeatureVector> x;
  std::vector<bool> y;
};

// Noisy labels from a nonlinear rule, optionally with coarse (tied) values.
Data noisy(std::size_t n, std::size_t p, unsigned seed, bool coarse) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  Data d;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureVector v(p);
    for (auto& e : v) e = coarse ? std::round(2 * z(g)) : z(g);
    const double s = v[0] - 0.5 * v[1 % p] * v[p - 1] + 0.3 * z(g);
    d.x.push_back(v);
    d.y.push_back(s > 0.2 || u(g) < 0.1);
  }
  d.y[0] = true;
  d.y[1] = false;
  return d;
}

ForestConfig single_tree(std::size_t p) {
  ForestConfig c;
  c.n_trees = 1;
  c.bootstrap = false;
  c.mtry = static_cast<int>(p);
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("gini") {
  CHECK(gini(10, 0) == 0.0);
  CHECK(gini(5, 5) == 0.5);
  CHECK(gini(3, 1) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(gini(0, 0) == 0.0);
}

TEST_CASE("separable data is fit exactly") {
  Data d;
  for (int i = 0; i < 40; ++i) {
    d.x.push_back({static_cast<double>(i)});
    d.y.push_back(i >= 17);
  }
  ForestConfig cfg;
  cfg.n_trees = 50;
  const auto f = fit_forest(d.x, d.y, cfg);
  for (std::size_t i = 0; i < d.x.size(); ++i) CHECK(f.predict_label(d.x[i]) == d.y[i]);
}

TEST_CASE("single tree matches an independent CART") {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const std::size_t p = 1 + seed % 5;
    const auto d = noisy(40 + 7 * seed, p, seed, seed % 2 == 0);
    const auto f = fit_forest(d.x, d.y, single_tree(p));
    const oracle::Cart cart(d.x, d.y);
    const auto probe = noisy(200, p, 100 + seed, seed % 2 == 0);
    for (const auto& v : probe.x) CHECK(f.predict_proba(v) == cart.predict(v));
    for (const auto& v : d.x) CHECK(f.predict_proba(v) == cart.predict(v));
    std::size_t leaves = 0;
    for (const auto& n : f.trees()[0].nodes()) leaves += n.is_leaf();
    CHECK(static_cast<int>(leaves) == cart.leaves());
  }
}

TEST_CASE("depth and leaf limits") {
  const auto d = noisy(120, 3, 4, false);
  auto cfg = single_tree(3);
  cfg.max_depth = 2;
  cfg.min_leaf = 5;
  const auto f = fit_forest(d.x, d.y, cfg);
  const oracle::Cart cart(d.x, d.y, 2, 5);
  for (const auto& v : noisy(100, 3, 44, false).x) CHECK(f.predict_proba(v) == cart.predict(v));
  for (const auto& n : f.trees()[0].nodes())
    if (n.is_leaf()) CHECK(n.count0 + n.count1 >= 5u);
}

TEST_CASE("determinism across runs and thread counts") {
  const auto d = noisy(300, 6, 7, false);
  ForestConfig cfg;
  cfg.n_trees = 60;
  cfg.seed = 42;
  cfg.threads = 1;
  const auto a = fit_forest(d.x, d.y, cfg);
  cfg.threads = 4;
  const auto b = fit_forest(d.x, d.y, cfg);
  CHECK(a.to_json().dump() == b.to_json().dump());
  const auto probe = noisy(50, 6, 8, false);
  for (const auto& v : probe.x) CHECK(a.predict_proba(v) == b.predict_proba(v));
  cfg.seed = 43;
  const auto c = fit_forest(d.x, d.y, cfg);
  CHECK(a.to_json().dump() != c.to_json().dump());
}

TEST_CASE("duplicating the training set keeps the splits") {
  const auto d = noisy(80, 4, 9, false);
  auto twice = d;
  twice.x.insert(twice.x.end(), d.x.begin(), d.x.end());
  twice.y.insert(twice.y.end(), d.y.begin(), d.y.end());
  const auto a = fit_forest(d.x, d.y, single_tree(4));
  const auto b = fit_forest(twice.x, twice.y, single_tree(4));
  const auto& na = a.trees()[0].nodes();
  const auto& nb = b.trees()[0].nodes();
  REQUIRE(na.size() == nb.size());
  for (std::size_t k = 0; k < na.size(); ++k) {
    CHECK(na[k].feature == nb[k].feature);
    CHECK(na[k].threshold == nb[k].threshold);
    CHECK(2 * na[k].count1 == nb[k].count1);
  }
}

TEST_CASE("votes are averaged within the per-tree range") {
  const auto d = noisy(200, 4, 10, true);
  ForestConfig cfg;
  cfg.n_trees = 25;
  const auto f = fit_forest(d.x, d.y, cfg);
  for (const auto& v : noisy(100, 4, 11, true).x) {
    double lo = 1, hi = 0, sum = 0;
    for (const auto& t : f.trees()) {
      const double q = t.predict_proba(v);
      lo = std::min(lo, q);
      hi = std::max(hi, q);
      sum += q;
    }
    const double p = f.predict_proba(v);
    CHECK(p >= lo);
    CHECK(p <= hi);
    CHECK(p == doctest::Approx(sum / 25).epsilon(1e-15));
  }
  // hand-made two-tree forest
  Tree one({TreeNode{-1, 0, -1, -1, 0, 3}}), zero({TreeNode{-1, 0, -1, -1, 4, 0}});
  Forest two(ForestConfig{}, 1, {one, zero});
  CHECK(two.predict_proba(std::vector<double>{0.0}) == 0.5);
  CHECK(two.predict_label(std::vector<double>{0.0}));
  Forest ones(ForestConfig{}, 1, {one, one});
  CHECK(ones.predict_proba(std::vector<double>{0.0}) == 1.0);
}

TEST_CASE("bootstrap leaves about 36.8 percent out of bag") {
  const std::size_t n = 5000;
  double total = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto idx = draw_bootstrap(n, s);
    CHECK(idx.size() == n);
    std::set<std::size_t> in(idx.begin(), idx.end());
    total += static_cast<double>(n - in.size()) / n;
  }
  CHECK(std::abs(total / 20 - std::exp(-1.0)) < 0.02);
  CHECK(draw_bootstrap(100, 1) == draw_bootstrap(100, 1));
}

TEST_CASE("preconditions, mtry and constant features") {
  Data d;
  d.x = {{1, 0}, {2, 0}, {3, 0}};
  d.y = {true, true, true};
  CHECK_THROWS_AS(fit_forest(d.x, d.y, ForestConfig{}), ValidationError);
  d.y = {true, false, true};
  auto cfg = ForestConfig{};
  cfg.mtry = 3;
  CHECK_THROWS_AS(fit_forest(d.x, d.y, cfg), ValidationError);
  cfg.mtry = 0;
  cfg.n_trees = 0;
  CHECK_THROWS_AS(fit_forest(d.x, d.y, cfg), ValidationError);
  CHECK(ForestConfig{}.resolved_mtry(12) == 4);
  CHECK(ForestConfig{}.resolved_mtry(5) == 3);
  // mtry = 1 with a constant second feature still finds the informative one
  cfg = ForestConfig{};
  cfg.mtry = 1;
  cfg.bootstrap = false;
  cfg.n_trees = 20;
  const auto f = fit_forest(d.x, d.y, cfg);
  for (const auto& t : f.trees()) CHECK(t.nodes().size() > 1);
  d.x[1][0] = std::nan("");
  CHECK_THROWS_AS(fit_forest(d.x, d.y, ForestConfig{}), ValidationError);
}

TEST_CASE("serialization round trip") {
  const auto d = noisy(150, 5, 12, false);
  ForestConfig cfg;
  cfg.n_trees = 30;
  const auto f = fit_forest(d.x, d.y, cfg);
  const auto g = Forest::from_json(nlohmann::ordered_json::parse(f.to_json().dump()));
  CHECK(g.to_json().dump() == f.to_json().dump());
  for (const auto& v : noisy(40, 5, 13, false).x) CHECK(g.predict_proba(v) == f.predict_proba(v));
  const auto counts = f.split_counts();
  CHECK(counts.size() == 5);
  CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) > 0);
}
