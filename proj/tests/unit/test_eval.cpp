#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "autoconfidence/error.hpp"
#include "autoconfidence/eval.hpp"
#include "support/oracles.hpp"

using namespace autoconfidence;
using namespace autoconfidence::eval;

namespace {

struct Scored {
  std::vector<double> s;
  std::vector<bool> y;
};

Scored random_scored(std::size_t n, unsigned seed, bool coarse) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> z;
  Scored d;
  for (std::size_t i = 0; i < n; ++i) {
    const bool y = z(g) > 0.3;
    double s = z(g) + (y ? 0.8 : 0.0);
    if (coarse) s = std::round(s * 2) / 2;
    d.s.push_back(s);
    d.y.push_back(y);
  }
  d.y[0] = true;
  d.y[1] = false;
  return d;
}

struct Surv {
  std::vector<double> risk, t;
  std::vector<bool> e;
};

Surv random_surv(std::size_t n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<int> day(1, 15), coarse(0, 6);
  std::bernoulli_distribution ev(0.6);
  Surv d;
  for (std::size_t i = 0; i < n; ++i) {
    d.t.push_back(day(g));
    d.e.push_back(ev(g));
    d.risk.push_back(coarse(g) * 0.25);
  }
  d.e[0] = true;
  d.t[0] = 0.5;
  return d;
}

}  // namespace

TEST_CASE("auroc trivial cases") {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.9};
  CHECK(auroc(s, {false, false, true, true}) == 1.0);
  CHECK(auroc(s, {true, true, false, false}) == 0.0);
  CHECK(auroc(std::vector<double>(6, 0.4), {true, false, true, false, false, true}) == 0.5);
  CHECK_THROWS_AS(auroc(s, {true, true, true, true}), ValidationError);
  CHECK_THROWS_AS(auroc(s, {true, false}), ValidationError);
}

TEST_CASE("auroc matches the pair count") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const auto d = random_scored(50, seed, seed % 2 == 0);
    CHECK(auroc(d.s, d.y) == oracle::auroc(d.s, d.y));
  }
}

TEST_CASE("auroc under transforms") {
  const auto d = random_scored(200, 3, false);
  const double a = auroc(d.s, d.y);
  std::vector<double> neg, ex, aff;
  for (double v : d.s) {
    neg.push_back(-v);
    ex.push_back(std::exp(v));
    aff.push_back(3.0 * v - 11.0);
  }
  CHECK(a + auroc(neg, d.y) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(auroc(ex, d.y) == a);
  CHECK(auroc(aff, d.y) == a);
}

TEST_CASE("roc curve area equals auroc") {
  const auto d = random_scored(300, 5, true);
  const auto roc = roc_curve(d.s, d.y);
  CHECK(roc.front().fpr == 0.0);
  CHECK(roc.back().fpr == 1.0);
  CHECK(roc.back().tpr == 1.0);
  double area = 0;
  for (std::size_t k = 1; k < roc.size(); ++k) {
    CHECK(roc[k].threshold < roc[k - 1].threshold);
    area += (roc[k].fpr - roc[k - 1].fpr) * (roc[k].tpr + roc[k - 1].tpr) / 2;
  }
  CHECK(area == doctest::Approx(auroc(d.s, d.y)).epsilon(1e-12));
}

TEST_CASE("c_index trivial cases") {
  const std::vector<double> t{1, 2, 3, 4, 5};
  const std::vector<bool> all(5, true);
  CHECK(c_index(std::vector<double>{5, 4, 3, 2, 1}, t, all) == 1.0);
  CHECK(c_index(std::vector<double>{1, 2, 3, 4, 5}, t, all) == 0.0);
  CHECK(c_index(std::vector<double>(5, 2.0), t, all) == 0.5);
  CHECK_THROWS_AS(c_index(std::vector<double>{1, 2}, std::vector<double>{1, 2}, {false, false}), ValidationError);
  // tied times are never comparable
  CHECK_THROWS_AS(c_index(std::vector<double>{1, 2}, std::vector<double>{3, 3}, {true, true}), ValidationError);
}

TEST_CASE("c_index matches a brute-force double loop") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const auto d = random_surv(40, seed);
    CHECK(c_index(d.risk, d.t, d.e) == oracle::c_index(d.risk, d.t, d.e));
  }
}

TEST_CASE("c_index skips pairs whose earlier member is censored") {
  // Observation 0 is censored first with a tiny risk; if it were counted the
  // index would drop below 1.
  const std::vector<double> risk{0.0, 3.0, 2.0, 1.0};
  const std::vector<double> t{1, 2, 3, 4};
  CHECK(c_index(risk, t, {false, true, true, true}) == 1.0);
  std::int64_t pairs = 0;
  oracle::c_index(risk, t, {false, true, true, true}, &pairs);
  CHECK(pairs == 3);
  CHECK(c_index(risk, t, {true, true, true, true}) == doctest::Approx(0.5));
}

TEST_CASE("accuracy and quantile") {
  CHECK(accuracy(std::vector<double>{0.2, 0.5, 0.7, 0.4}, {false, true, false, false}) == 0.75);
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile({5, 1, 3}, 0.0) == 1);
  CHECK(quantile({5, 1, 3}, 1.0) == 5);
  CHECK(quantile({0, 10}, 0.025) == doctest::Approx(0.25));
}

TEST_CASE("bootstrap interval") {
  const ResampleMetric constant = [](const std::vector<std::size_t>&) { return 0.42; };
  const auto c = bootstrap_ci(constant, 30, 100, 0.95, 1);
  CHECK(c.lo == 0.42);
  CHECK(c.hi == 0.42);

  const auto d = random_scored(120, 9, false);
  const ResampleMetric roc = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> s;
    std::vector<bool> y;
    for (auto i : idx) {
      s.push_back(d.s[i]);
      y.push_back(d.y[i]);
    }
    return auroc(s, y);
  };
  const auto a = bootstrap_ci(roc, d.s.size(), 100, 0.95, 5);
  const auto b = bootstrap_ci(roc, d.s.size(), 100, 0.95, 5);
  CHECK(a.lo == b.lo);
  CHECK(a.hi == b.hi);
  CHECK(a.lo < a.hi);

  // a metric that is always degenerate gives up after 10x draws
  int calls = 0;
  const ResampleMetric bad = [&](const std::vector<std::size_t>&) -> double {
    ++calls;
    throw ValidationError("single class");
  };
  CHECK_THROWS_AS(bootstrap_ci(bad, 10, 20, 0.95, 1), ValidationError);
  CHECK(calls == 200);
}

TEST_CASE("bootstrap redraws single-class resamples") {
  std::vector<bool> y(40, false);
  y[3] = true;
  int calls = 0;
  const ResampleMetric m = [&](const std::vector<std::size_t>& idx) {
    ++calls;
    std::vector<double> s;
    std::vector<bool> yy;
    for (auto i : idx) {
      s.push_back(static_cast<double>(i));
      yy.push_back(y[i]);
    }
    return auroc(s, yy);
  };
  bootstrap_ci(m, y.size(), 50, 0.95, 2);
  CHECK(calls > 50);
}

TEST_CASE("bootstrap interval brackets the estimate") {
  int hits = 0;
  for (unsigned trial = 0; trial < 200; ++trial) {
    const auto d = random_scored(150, 1000 + trial, false);
    const ResampleMetric roc = [&](const std::vector<std::size_t>& idx) {
      std::vector<double> s;
      std::vector<bool> y;
      for (auto i : idx) {
        s.push_back(d.s[i]);
        y.push_back(d.y[i]);
      }
      return auroc(s, y);
    };
    const double point = auroc(d.s, d.y);
    const auto ci = bootstrap_ci(roc, d.s.size(), 100, 0.95, trial);
    hits += (ci.lo <= point && point <= ci.hi);
  }
  CHECK(hits >= 190);
}

TEST_CASE("crossval with oracle and constant models") {
  const auto d = random_scored(100, 21, false);
  CrossvalData data{d.y, {}, {}};
  const FitPredict truth = [&](const Fold&, const Fold& test, std::size_t) {
    FoldPrediction p;
    for (auto i : test) p.scores.push_back(d.y[i] ? 1.0 : 0.0);
    return p;
  };
  const auto r = crossval(data, truth, 5, 3, 50);
  CHECK(r.row.auroc->value == 1.0);
  CHECK(r.row.auroc->lo == 1.0);
  CHECK(*r.row.accuracy == 1.0);
  CHECK_FALSE(r.row.c_index);

  const FitPredict flat = [](const Fold&, const Fold& test, std::size_t) {
    return FoldPrediction{std::vector<double>(test.size(), 0.3), {}};
  };
  CHECK(crossval(data, flat, 5, 3, 50).row.auroc->value == 0.5);
}

TEST_CASE("crossval scores each observation exactly once") {
  const auto d = random_scored(97, 22, false);
  CrossvalData data{d.y, {}, {}};
  std::vector<int> seen(d.y.size(), 0);
  std::set<std::size_t> folds;
  const FitPredict fp = [&](const Fold& train, const Fold& test, std::size_t f) {
    folds.insert(f);
    std::set<std::size_t> tr(train.begin(), train.end());
    FoldPrediction p;
    for (auto i : test) {
      CHECK(tr.count(i) == 0);
      ++seen[i];
      p.scores.push_back(d.s[i]);
    }
    CHECK(train.size() + test.size() == d.y.size());
    return p;
  };
  const auto r = crossval(data, fp, 5, 8, 20);
  CHECK(folds.size() == 5);
  for (int s : seen) CHECK(s == 1);
  CHECK(r.oof_scores == d.s);
  CHECK(r.row.auroc->value == auroc(d.s, d.y));
  CHECK(r.row.auroc->lo <= r.row.auroc->value);
  CHECK(r.row.auroc->value <= r.row.auroc->hi);
}

TEST_CASE("crossval c-index from fold risks") {
  const auto s = random_surv(80, 30);
  std::vector<bool> y(s.e.begin(), s.e.end());
  CrossvalData data{y, s.t, s.e};
  const FitPredict fp = [&](const Fold&, const Fold& test, std::size_t) {
    FoldPrediction p;
    for (auto i : test) {
      p.scores.push_back(s.risk[i]);
      p.risks.push_back(s.risk[i]);
    }
    return p;
  };
  const auto r = crossval(data, fp, 4, 2, 30);
  REQUIRE(r.row.c_index);
  CHECK(r.row.c_index->value == oracle::c_index(s.risk, s.t, s.e));
}

TEST_CASE("crossval names the fold with a single training class") {
  std::vector<bool> y(20, false);
  y[0] = true;  // one positive: its fold trains on negatives only
  CrossvalData data{y, {}, {}};
  const FitPredict fp = [](const Fold&, const Fold& test, std::size_t) {
    return FoldPrediction{std::vector<double>(test.size(), 0.0), {}};
  };
  try {
    crossval(data, fp, 5, 1, 10);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("fold ") != std::string::npos);
  }
}

TEST_CASE("per-fold standardization differs from global standardization") {
  // A threshold model on a centered feature. One outlier drags the global mean
  // up; the fold that holds it out trains on a much smaller mean.
  std::vector<double> x;
  std::vector<bool> y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(i == 39 ? 1000.0 : i);
    y.push_back(i % 3 == 0);
  }
  const double gm = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  CrossvalData data{y, {}, {}};
  auto run = [&](bool per_fold) {
    const FitPredict fp = [&](const Fold& train, const Fold& test, std::size_t) {
      double m = gm;
      if (per_fold) {
        m = 0;
        for (auto i : train) m += x[i];
        m /= train.size();
      }
      FoldPrediction p;
      for (auto i : test) p.scores.push_back(x[i] - m > 0 ? 1.0 : 0.0);
      return p;
    };
    return crossval(data, fp, 5, 4, 10).oof_scores;
  };
  CHECK(run(true) != run(false));
}

TEST_CASE("welch t-test") {
  const std::vector<double> a{7.1, 8.0, 6.9, 7.6, 7.4}, b{6.2, 6.6, 5.9, 6.4, 6.0};
  const auto w = welch_t_test(a, b);
  const auto [t, df] = oracle::welch(a, b);
  CHECK(w.t == t);
  CHECK(w.df == df);
  CHECK(w.p_value > 0.0);
  CHECK(w.p_value < 0.01);

  const auto same = welch_t_test(a, a);
  CHECK(same.t == 0.0);
  CHECK(same.p_value == doctest::Approx(1.0));

  CHECK_THROWS_AS(welch_t_test(std::vector<double>{1.0}, a), ValidationError);
}

TEST_CASE("welch p-value against tabulated quantiles") {
  // equal sizes and variances give df = 2n - 2
  const std::vector<double> a{1, 2, 3, 4, 5, 6}, b{3, 4, 5, 6, 7, 8};
  const auto w = welch_t_test(a, b);
  CHECK(w.df == doctest::Approx(10.0));
  CHECK(w.t == doctest::Approx(-2.0 / std::sqrt(3.5 / 3.0)));
  // t = -1.8516 with 10 df: two-sided p = 0.0937
  CHECK(w.p_value == doctest::Approx(0.0937).epsilon(0.005));
}

TEST_CASE("group comparison rendering") {
  GroupComparison g;
  g.dimension = "Depth of Research";
  g.mean_published = 7.42;
  g.mean_unpublished = 6.31;
  CHECK(g.render() == "Depth of Research: 7.42 vs 6.31");

  std::vector<llm::EvalScores> pub, unpub;
  for (int k = 0; k < 4; ++k) {
    pub.push_back(llm::EvalScores::from_values({8, 7, 7, 8 - k % 2, 7}));
    unpub.push_back(llm::EvalScores::from_values({6, 6, 7, 6 + k % 2, 5}));
  }
  const auto rows = group_compare(pub, unpub);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].dimension == "Originality");
  CHECK(rows[3].render() == "Depth of Research: 7.50 vs 6.50");
  CHECK(rows[2].t == 0.0);
  CHECK(rows[2].p_value == 1.0);
  CHECK(std::isinf(rows[0].t));
}

TEST_CASE("metric formatting") {
  CHECK(format_metric("AUROC", {0.747, 0.716, 0.774}) == "AUROC = 0.747 (95% CI: 0.716-0.774)");
  CHECK(format_metric("C-index", {0.66, 0.6, 0.7}, 0.9) == "C-index = 0.660 (90% CI: 0.600-0.700)");
}

TEST_CASE("report rendering") {
  EvalReport empty;
  const auto table = render_accuracy_table(empty);
  CHECK(table ==
        "Binary Classification Accuracy\n"
        "Model\tLLM-Driven Predictions/Evaluations\twith Semantic Embeddings\twith Article Usage\n");
  CHECK(render_report(empty) == table);

  EvalReport r;
  r.llm_direct_accuracy = 0.5;
  ReportRow f;
  f.model = "forest";
  f.feature_set = "scores";
  f.auroc = MetricCI{0.747, 0.716, 0.774};
  f.accuracy = 0.7;
  r.rows.push_back(f);
  ReportRow c = f;
  c.model = "cure";
  c.feature_set = "scores_emb";
  c.c_index = MetricCI{0.671, 0.65, 0.69};
  c.accuracy = 0.71;
  r.rows.push_back(c);
  const auto text = render_report(r);
  CHECK(text.find("Random Forest\n(1) LLM-driven evaluation scores: AUROC = 0.747 (95% CI: 0.716-0.774)\n") !=
        std::string::npos);
  CHECK(text.find("Survival Cure Model\n(1) LLM-driven evaluation scores + semantic embeddings: AUROC = 0.747 "
                  "(95% CI: 0.716-0.774); C-index = 0.671 (95% CI: 0.650-0.690)\n") != std::string::npos);
  CHECK(text.find("GPT-4o\t0.500\t-\t-\n") != std::string::npos);
  CHECK(text.find("Survival Cure Model\t-\t0.710\t-\n") != std::string::npos);
  CHECK(text.find("Random Forest\t0.700\t-\t-\n") != std::string::npos);
}

TEST_CASE("report json round trip") {
  EvalReport r;
  r.seed = 7;
  r.folds = 5;
  r.n_boot = 100;
  r.llm_direct_accuracy = 0.61;
  ReportRow row;
  row.model = "cure";
  row.feature_set = "scores_emb_usage";
  row.auroc = MetricCI{0.8, 0.7, 0.9};
  row.c_index = MetricCI{0.66, 0.6, 0.7};
  row.accuracy = 0.75;
  r.rows.push_back(row);
  GroupComparison g{"Originality", 7.1, 6.2, 3.2, 20.5, 0.004};
  r.group_comparison.push_back(g);
  const auto j = to_json(r);
  const auto back = report_from_json(nlohmann::ordered_json::parse(j.dump()));
  CHECK(to_json(back).dump() == j.dump());
  CHECK(render_report(back) == render_report(r));
  CHECK_THROWS_AS(report_from_json(nlohmann::ordered_json::object()), ParseError);
}
