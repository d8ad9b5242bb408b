#include "autoconfidence/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "autoconfidence/error.hpp"
#include "autoconfidence/rng.hpp"

namespace autoconfidence::eval {

namespace {

void require_both_classes(const std::vector<bool>& labels, const char* what) {
  const auto pos = std::count(labels.begin(), labels.end(), true);
  if (pos == 0 || pos == static_cast<long>(labels.size()))
    throw ValidationError(std::string(what) + ": labels contain a single class");
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Fenwick tree of counts over ranks 1..n.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t rank) {
    for (std::size_t i = rank; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  std::uint64_t prefix(std::size_t rank) const {
    std::uint64_t s = 0;
    for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::uint64_t> tree_;
};

const char* model_display(const std::string& model) {
  if (model == "forest") return "Random Forest";
  if (model == "cure") return "Survival Cure Model";
  return nullptr;
}

const char* set_display(const std::string& set) {
  if (set == "scores") return "LLM-driven evaluation scores";
  if (set == "scores_emb") return "LLM-driven evaluation scores + semantic embeddings";
  if (set == "scores_emb_usage") return "LLM-driven evaluation scores + semantic embeddings + article usage";
  return nullptr;
}

int set_column(const std::string& set) {
  if (set == "scores") return 0;
  if (set == "scores_emb") return 1;
  if (set == "scores_emb_usage") return 2;
  return -1;
}

}  // namespace

double auroc(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw ValidationError("auroc: scores and labels differ in length");
  require_both_classes(labels, "auroc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  // Twice the Mann-Whitney count, kept integral.
  std::uint64_t twice = 0, neg_below = 0, n1 = 0, n0 = 0;
  std::size_t g = 0;
  while (g < order.size()) {
    std::size_t end = g;
    std::uint64_t pos_here = 0, neg_here = 0;
    while (end < order.size() && scores[order[end]] == scores[order[g]]) {
      (labels[order[end]] ? pos_here : neg_here) += 1;
      ++end;
    }
    twice += 2 * pos_here * neg_below + pos_here * neg_here;
    neg_below += neg_here;
    n1 += pos_here;
    n0 += neg_here;
    g = end;
  }
  return static_cast<double>(twice) / static_cast<double>(2 * n1 * n0);
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw ValidationError("roc_curve: scores and labels differ in length");
  require_both_classes(labels, "roc_curve");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  const double n1 = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  const double n0 = static_cast<double>(labels.size()) - n1;
  std::vector<RocPoint> pts{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  double tp = 0, fp = 0;
  std::size_t g = 0;
  while (g < order.size()) {
    const double s = scores[order[g]];
    while (g < order.size() && scores[order[g]] == s) {
      (labels[order[g]] ? tp : fp) += 1;
      ++g;
    }
    pts.push_back({s, fp / n0, tp / n1});
  }
  return pts;
}

double c_index(std::span<const double> risk, std::span<const double> times, const std::vector<bool>& events) {
  const std::size_t n = risk.size();
  if (times.size() != n || events.size() != n) throw ValidationError("c_index: input lengths differ");

  std::vector<double> distinct(risk.begin(), risk.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  auto rank_of = [&](double r) {
    return static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), r) - distinct.begin()) + 1;
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] > times[b]; });

  // Walk from the latest time down; the tree holds risks of strictly later observations.
  Fenwick later(distinct.size());
  std::uint64_t inserted = 0, twice_concordant = 0, comparable = 0;
  std::size_t g = 0;
  while (g < n) {
    std::size_t end = g;
    while (end < n && times[order[end]] == times[order[g]]) ++end;
    for (std::size_t k = g; k < end; ++k) {
      const auto i = order[k];
      if (!events[i]) continue;
      const std::size_t rank = rank_of(risk[i]);
      const std::uint64_t below = later.prefix(rank - 1);
      const std::uint64_t equal = later.prefix(rank) - below;
      twice_concordant += 2 * below + equal;
      comparable += inserted;
    }
    for (std::size_t k = g; k < end; ++k) {
      later.add(rank_of(risk[order[k]]));
      ++inserted;
    }
    g = end;
  }
  if (comparable == 0) throw ValidationError("c_index: no comparable pairs");
  return static_cast<double>(twice_concordant) / static_cast<double>(2 * comparable);
}

double accuracy(std::span<const double> scores, const std::vector<bool>& labels, double threshold) {
  if (scores.size() != labels.size() || scores.empty()) throw ValidationError("accuracy: bad input lengths");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) hits += ((scores[i] >= threshold) == labels[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile: no values");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Interval bootstrap_ci(const ResampleMetric& metric, std::size_t n, int n_boot, double level, std::uint64_t seed) {
  if (n == 0) throw ValidationError("bootstrap_ci: empty data");
  if (n_boot < 1) throw ValidationError("bootstrap_ci: n_boot must be positive");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("bootstrap_ci: level must lie in (0,1)");
  Rng rng(derive_seed(seed, 0xb007));
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(n_boot));
  std::vector<std::size_t> idx(n);
  const long max_draws = 10L * n_boot;
  long draws = 0;
  while (static_cast<int>(stats.size()) < n_boot) {
    if (draws++ >= max_draws)
      throw ValidationError("bootstrap_ci: too many degenerate resamples (" + std::to_string(max_draws) + " draws)");
    for (auto& i : idx) i = uniform_index(rng, n);
    try {
      stats.push_back(metric(idx));
    } catch (const ValidationError&) {
      // degenerate resample; redraw
    }
  }
  const double alpha = (1.0 - level) / 2.0;
  return {quantile(stats, alpha), quantile(stats, 1.0 - alpha)};
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ValidationError("welch_t_test: each group needs at least 2 values");
  auto moments = [](std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::pair{m, ss / (n - 1.0)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double sa = va / static_cast<double>(a.size()), sb = vb / static_cast<double>(b.size());
  const double se2 = sa + sb;
  WelchResult r;
  if (se2 == 0.0) {
    if (ma == mb) return r;
    r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.df = static_cast<double>(a.size() + b.size() - 2);
    r.p_value = 0.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (sa * sa / static_cast<double>(a.size() - 1) + sb * sb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(r.df);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

std::string GroupComparison::render() const {
  return dimension + ": " + fixed(mean_published, 2) + " vs " + fixed(mean_unpublished, 2);
}

std::vector<GroupComparison> group_compare(const std::vector<llm::EvalScores>& published,
                                           const std::vector<llm::EvalScores>& unpublished) {
  std::vector<GroupComparison> out;
  for (std::size_t k = 0; k < llm::kScoreKeys.size(); ++k) {
    std::vector<double> a, b;
    for (const auto& s : published) a.push_back(static_cast<double>(s.values()[k]));
    for (const auto& s : unpublished) b.push_back(static_cast<double>(s.values()[k]));
    const auto w = welch_t_test(a, b);
    GroupComparison g;
    g.dimension = std::string(llm::kScoreKeys[k]);
    g.mean_published = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    g.mean_unpublished = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
    g.t = w.t;
    g.df = w.df;
    g.p_value = w.p_value;
    out.push_back(g);
  }
  return out;
}

std::string format_metric(const std::string& name, const MetricCI& m, double level) {
  const int pct = static_cast<int>(std::lround(level * 100.0));
  return name + " = " + fixed(m.value, 3) + " (" + std::to_string(pct) + "% CI: " + fixed(m.lo, 3) + "-" +
         fixed(m.hi, 3) + ")";
}

std::string render_accuracy_table(const EvalReport& report) {
  std::ostringstream out;
  out << "Binary Classification Accuracy\n";
  out << "Model\tLLM-Driven Predictions/Evaluations\twith Semantic Embeddings\twith Article Usage\n";
  auto emit = [&](const std::string& name, const std::array<std::optional<double>, 3>& cells) {
    out << name;
    for (const auto& c : cells) out << '\t' << (c ? fixed(*c, 3) : std::string("-"));
    out << '\n';
  };
  if (report.llm_direct_accuracy) emit(report.llm_direct_name, {report.llm_direct_accuracy, std::nullopt, std::nullopt});
  for (const std::string model : {"cure", "forest"}) {
    std::array<std::optional<double>, 3> cells{};
    bool any = false;
    for (const auto& row : report.rows) {
      const int col = set_column(row.feature_set);
      if (row.model != model || col < 0) continue;
      any = true;
      cells[static_cast<std::size_t>(col)] = row.accuracy;
    }
    if (any) emit(model_display(model), cells);
  }
  return out.str();
}

std::string render_report(const EvalReport& report) {
  std::ostringstream out;
  for (const std::string model : {"forest", "cure"}) {
    int item = 0;
    for (const auto& row : report.rows) {
      if (row.model != model) continue;
      if (item == 0) out << model_display(model) << '\n';
      ++item;
      const char* set = set_display(row.feature_set);
      out << "(" << item << ") " << (set ? set : row.feature_set.c_str()) << ":";
      if (row.auroc) out << ' ' << format_metric("AUROC", *row.auroc, report.level);
      if (row.c_index) out << (row.auroc ? "; " : " ") << format_metric("C-index", *row.c_index, report.level);
      out << '\n';
    }
    if (item > 0) out << '\n';
  }
  out << render_accuracy_table(report);
  if (!report.group_comparison.empty()) {
    out << "\nLLM-driven evaluation scores, published vs unpublished (Welch t-test)\n";
    for (const auto& g : report.group_comparison) {
      char buf[96];
      std::snprintf(buf, sizeof buf, " (t = %.2f, p = %.3g)", g.t, g.p_value);
      out << g.render() << buf << '\n';
    }
  }
  return out.str();
}

namespace {

nlohmann::ordered_json metric_json(const std::optional<MetricCI>& m) {
  if (!m) return nullptr;
  return {{"value", m->value}, {"lo", m->lo}, {"hi", m->hi}};
}

std::optional<MetricCI> metric_from(const nlohmann::ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  return MetricCI{j.at("value").get<double>(), j.at("lo").get<double>(), j.at("hi").get<double>()};
}

}  // namespace

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["folds"] = report.folds;
  j["n_boot"] = report.n_boot;
  j["level"] = report.level;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["model"] = r.model;
    row["feature_set"] = r.feature_set;
    row["auroc"] = metric_json(r.auroc);
    row["c_index"] = metric_json(r.c_index);
    row["accuracy_at_half"] = r.accuracy ? nlohmann::ordered_json(*r.accuracy) : nlohmann::ordered_json(nullptr);
    j["rows"].push_back(std::move(row));
  }
  j["llm_direct"] = {{"name", report.llm_direct_name},
                     {"accuracy", report.llm_direct_accuracy ? nlohmann::ordered_json(*report.llm_direct_accuracy)
                                                             : nlohmann::ordered_json(nullptr)}};
  j["group_comparison"] = nlohmann::ordered_json::array();
  for (const auto& g : report.group_comparison)
    j["group_comparison"].push_back({{"dimension", g.dimension},
                                     {"mean_published", g.mean_published},
                                     {"mean_unpublished", g.mean_unpublished},
                                     {"t", std::isfinite(g.t) ? nlohmann::ordered_json(g.t) : nlohmann::ordered_json(nullptr)},
                                     {"df", g.df},
                                     {"p_value", g.p_value}});
  return j;
}

EvalReport report_from_json(const nlohmann::ordered_json& j) {
  try {
    EvalReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.folds = j.at("folds").get<int>();
    r.n_boot = j.at("n_boot").get<int>();
    r.level = j.value("level", 0.95);
    for (const auto& row : j.at("rows")) {
      ReportRow rr;
      rr.model = row.at("model").get<std::string>();
      rr.feature_set = row.at("feature_set").get<std::string>();
      rr.auroc = metric_from(row.at("auroc"));
      rr.c_index = metric_from(row.at("c_index"));
      if (!row.at("accuracy_at_half").is_null()) rr.accuracy = row.at("accuracy_at_half").get<double>();
      r.rows.push_back(std::move(rr));
    }
    if (j.contains("llm_direct")) {
      const auto& l = j.at("llm_direct");
      r.llm_direct_name = l.value("name", r.llm_direct_name);
      if (!l.at("accuracy").is_null()) r.llm_direct_accuracy = l.at("accuracy").get<double>();
    }
    if (j.contains("group_comparison"))
      for (const auto& g : j.at("group_comparison")) {
        GroupComparison gc;
        gc.dimension = g.at("dimension").get<std::string>();
        gc.mean_published = g.at("mean_published").get<double>();
        gc.mean_unpublished = g.at("mean_unpublished").get<double>();
        gc.t = g.at("t").is_null() ? std::numeric_limits<double>::infinity() : g.at("t").get<double>();
        gc.df = g.at("df").get<double>();
        gc.p_value = g.at("p_value").get<double>();
        r.group_comparison.push_back(gc);
      }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

CrossvalResult crossval(const CrossvalData& data, const FitPredict& fit_predict, std::size_t k, std::uint64_t seed,
                        int n_boot, double level) {
  const std::size_t n = data.labels.size();
  const bool survival = !data.times.empty();
  if (survival && (data.times.size() != n || data.events.size() != n))
    throw ValidationError("crossval: times/events must match labels in length");

  const auto folds = kfold_split(data.labels, k, seed);
  CrossvalResult res;
  res.oof_scores.assign(n, std::numeric_limits<double>::quiet_NaN());
  res.fold_of.assign(n, k);
  std::vector<bool> has_risk(n, false);
  res.oof_risks.assign(n, std::numeric_limits<double>::quiet_NaN());

  for (std::size_t f = 0; f < folds.size(); ++f) {
    Fold train;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    std::sort(train.begin(), train.end());
    std::size_t pos = 0;
    for (auto i : train) pos += data.labels[i] ? 1 : 0;
    if (pos == 0 || pos == train.size())
      throw ValidationError("crossval: training split for fold " + std::to_string(f) + " has a single class");

    const FoldPrediction pred = fit_predict(train, folds[f], f);
    if (pred.scores.size() != folds[f].size())
      throw ValidationError("crossval: fold " + std::to_string(f) + " returned the wrong number of scores");
    if (!pred.risks.empty() && pred.risks.size() != folds[f].size())
      throw ValidationError("crossval: fold " + std::to_string(f) + " returned the wrong number of risks");
    for (std::size_t t = 0; t < folds[f].size(); ++t) {
      const auto i = folds[f][t];
      res.oof_scores[i] = pred.scores[t];
      res.fold_of[i] = f;
      if (!pred.risks.empty()) {
        res.oof_risks[i] = pred.risks[t];
        has_risk[i] = true;
      }
    }
  }

  const auto& scores = res.oof_scores;
  auto subset_labels = [&](const std::vector<std::size_t>& idx) {
    std::vector<bool> out(idx.size());
    for (std::size_t t = 0; t < idx.size(); ++t) out[t] = data.labels[idx[t]];
    return out;
  };
  auto subset = [](const std::vector<double>& v, const std::vector<std::size_t>& idx) {
    std::vector<double> out(idx.size());
    for (std::size_t t = 0; t < idx.size(); ++t) out[t] = v[idx[t]];
    return out;
  };

  const auto roc_seed = derive_seed(seed, 1);
  const double point = auroc(scores, data.labels);
  const auto ci = bootstrap_ci([&](const auto& idx) { return auroc(subset(scores, idx), subset_labels(idx)); }, n,
                               n_boot, level, roc_seed);
  res.row.auroc = MetricCI{point, ci.lo, ci.hi};
  res.row.accuracy = accuracy(scores, data.labels);
  res.row.roc = roc_curve(scores, data.labels);

  const bool all_risks = std::all_of(has_risk.begin(), has_risk.end(), [](bool b) { return b; });
  if (survival && all_risks) {
    const double c = c_index(res.oof_risks, data.times, data.events);
    const auto cci = bootstrap_ci(
        [&](const auto& idx) {
          std::vector<bool> ev(idx.size());
          for (std::size_t t = 0; t < idx.size(); ++t) ev[t] = data.events[idx[t]];
          return c_index(subset(res.oof_risks, idx), subset(data.times, idx), ev);
        },
        n, n_boot, level, derive_seed(seed, 2));
    res.row.c_index = MetricCI{c, cci.lo, cci.hi};
  } else if (!all_risks) {
    res.oof_risks.clear();
  }
  return res;
}

}  // namespace autoconfidence::eval
