#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "autoconfidence/cure_model.hpp"
#include "autoconfidence/error.hpp"
#include "autoconfidence/eval.hpp"
#include "autoconfidence/forest.hpp"
#include "autoconfidence/llm_eval.hpp"
#include "autoconfidence/pipeline.hpp"

namespace py = pybind11;
using namespace autoconfidence;

namespace {

// JSON crosses the boundary as text; the Python side decodes it.
std::string dump(const nlohmann::ordered_json& j) { return j.dump(); }

pipeline::PipelineConfig config_from(const std::string& config_json) {
  if (config_json.empty()) return pipeline::PipelineConfig{};
  return pipeline::PipelineConfig::from_json(nlohmann::json::parse(config_json));
}

std::vector<bool> as_bools(const std::vector<int>& v) { return {v.begin(), v.end()}; }

std::vector<FeatureVector> rows_of(const Eigen::MatrixXd& x) {
  std::vector<FeatureVector> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)].assign(x.row(i).data(), x.row(i).data() + x.cols());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the autoconfidence package";

  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", validation.ptr());
  py::register_exception<llm::ResponseError>(m, "ResponseError", validation.ptr());
  py::register_exception<TransportError>(m, "TransportError", PyExc_ConnectionError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  // metrics
  m.def("auroc", [](const std::vector<double>& s, const std::vector<int>& y) { return eval::auroc(s, as_bools(y)); },
        py::arg("scores"), py::arg("labels"));
  m.def(
      "c_index",
      [](const std::vector<double>& r, const std::vector<double>& t, const std::vector<int>& e) {
        return eval::c_index(r, t, as_bools(e));
      },
      py::arg("risk"), py::arg("times"), py::arg("events"));
  m.def(
      "roc_curve",
      [](const std::vector<double>& s, const std::vector<int>& y) {
        std::vector<std::tuple<double, double, double>> out;
        for (const auto& p : eval::roc_curve(s, as_bools(y))) out.emplace_back(p.threshold, p.fpr, p.tpr);
        return out;
      },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "welch_t_test",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto w = eval::welch_t_test(a, b);
        return py::make_tuple(w.t, w.df, w.p_value);
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "format_metric",
      [](const std::string& name, double v, double lo, double hi, double level) {
        return eval::format_metric(name, {v, lo, hi}, level);
      },
      py::arg("name"), py::arg("value"), py::arg("lo"), py::arg("hi"), py::arg("level") = 0.95);
  m.def(
      "render_report", [](const std::string& report_json) {
        return eval::render_report(eval::report_from_json(nlohmann::ordered_json::parse(report_json)));
      },
      py::arg("report_json"));

  // cure model
  py::class_<cure::CureModelParams>(m, "CureModel")
      .def_readonly("gamma", &cure::CureModelParams::gamma)
      .def_readonly("beta", &cure::CureModelParams::beta)
      .def_property_readonly("event_times", [](const cure::CureModelParams& p) { return p.baseline.event_times; })
      .def_property_readonly("cum_hazard", [](const cure::CureModelParams& p) { return p.baseline.cum_hazard; })
      .def("confidence", [](const cure::CureModelParams& p, const std::vector<double>& x) {
        return cure::predict_confidence(p, x);
      })
      .def("survival", [](const cure::CureModelParams& p, const std::vector<double>& x, double t) {
        return cure::mixture_survival(p, x, t);
      })
      .def(
          "risk",
          [](const cure::CureModelParams& p, const std::vector<double>& x, const std::string& kind, double horizon) {
            return cure::risk_score(p, x, cure::parse_risk_score(kind), horizon);
          },
          py::arg("x"), py::arg("kind") = "incidence_times_hazard", py::arg("horizon") = 365.0)
      .def("to_json", [](const cure::CureModelParams& p) { return dump(cure::to_json(p)); });

  m.def(
      "fit_cure",
      [](const Eigen::VectorXd& time, const std::vector<int>& event, const Eigen::MatrixXd& x, int max_em_iters,
         double em_tol, double ridge) {
        cure::SurvivalData d{time, as_bools(event), x};
        cure::FitConfig cfg;
        cfg.max_em_iters = max_em_iters;
        cfg.em_tol = em_tol;
        cfg.ridge = ridge;
        std::pair<cure::CureModelParams, cure::FitDiagnostics> fitted;
        {
          py::gil_scoped_release release;
          fitted = cure::fit_em(d, cfg);
        }
        const auto& [params, diag] = fitted;
        py::dict info;
        info["iterations"] = diag.iterations;
        info["converged"] = diag.converged;
        info["log_likelihood"] = diag.log_likelihood;
        info["loglik_trace"] = diag.loglik_trace;
        info["warning"] = diag.warning;
        return py::make_tuple(params, info);
      },
      py::arg("time"), py::arg("event"), py::arg("x"), py::arg("max_em_iters") = 200, py::arg("em_tol") = 1e-7,
      py::arg("ridge") = 1e-6);

  // random forest
  py::class_<forest::Forest>(m, "Forest")
      .def("predict_proba", [](const forest::Forest& f, const Eigen::MatrixXd& x) {
        std::vector<double> out;
        for (const auto& row : rows_of(x)) out.push_back(f.predict_proba(row));
        return out;
      })
      .def_property_readonly("n_trees", [](const forest::Forest& f) { return f.trees().size(); })
      .def("split_counts", &forest::Forest::split_counts)
      .def("to_json", [](const forest::Forest& f) { return dump(f.to_json()); });

  m.def(
      "fit_forest",
      [](const Eigen::MatrixXd& x, const std::vector<int>& y, int n_trees, int max_depth, int min_leaf, int mtry,
         std::uint64_t seed, bool bootstrap, int threads) {
        forest::ForestConfig cfg;
        cfg.n_trees = n_trees;
        cfg.max_depth = max_depth;
        cfg.min_leaf = min_leaf;
        cfg.mtry = mtry;
        cfg.seed = seed;
        cfg.bootstrap = bootstrap;
        cfg.threads = threads;
        const auto rows = rows_of(x);
        const auto labels = as_bools(y);
        py::gil_scoped_release release;
        return forest::fit_forest(rows, labels, cfg);
      },
      py::arg("x"), py::arg("y"), py::arg("n_trees") = 500, py::arg("max_depth") = 0, py::arg("min_leaf") = 1,
      py::arg("mtry") = 0, py::arg("seed") = 1, py::arg("bootstrap") = true, py::arg("threads") = 0);

  // LLM scoring helpers
  m.attr("SCORE_KEYS") = [] {
    std::vector<std::string> keys;
    for (auto k : llm::kScoreKeys) keys.emplace_back(k);
    return keys;
  }();
  m.def("mock_scores", [](const std::string& text) {
    const auto v = llm::mock_scores(text).values();
    return std::vector<int>(v.begin(), v.end());
  });
  m.def("parse_eval_response", [](const std::string& raw) {
    const auto v = llm::parse_eval_response(raw).values();
    return std::vector<int>(v.begin(), v.end());
  });

  // pipeline stages; config is a JSON document in the CLI's format
  m.def(
      "ingest",
      [](const std::string& source, const std::filesystem::path& out, std::optional<std::filesystem::path> terms,
         const std::string& config) {
        pipeline::cmd_ingest({source, terms, out, true}, config_from(config));
      },
      py::arg("source"), py::arg("out"), py::arg("terms_file") = std::nullopt, py::arg("config") = "");
  m.def(
      "score",
      [](const std::filesystem::path& in, const std::filesystem::path& out, bool binary, const std::string& config) {
        return pipeline::cmd_score({in, out, false, binary}, config_from(config));
      },
      py::arg("cohort"), py::arg("out"), py::arg("binary") = true, py::arg("config") = "");
  m.def(
      "featurize",
      [](const std::filesystem::path& cohort, const std::filesystem::path& scores,
         const std::filesystem::path& embeddings, const std::string& set, const std::filesystem::path& out,
         const std::string& config) {
        pipeline::cmd_featurize({cohort, scores, embeddings, embed::parse_feature_set(set), out}, config_from(config));
      },
      py::arg("cohort"), py::arg("scores"), py::arg("embeddings"), py::arg("set") = "scores_emb_usage",
      py::arg("out"), py::arg("config") = "");
  m.def(
      "evaluate",
      [](const std::filesystem::path& features, const std::vector<std::string>& models,
         const std::vector<std::string>& sets, const std::filesystem::path& out, const std::string& config) {
        pipeline::EvaluateArgs args;
        args.features = features;
        args.models = models;
        args.sets.clear();
        for (const auto& s : sets) args.sets.push_back(embed::parse_feature_set(s));
        args.out = out;
        const auto cfg = config_from(config);
        py::gil_scoped_release release;
        return dump(eval::to_json(pipeline::cmd_evaluate(args, cfg)));
      },
      py::arg("features"), py::arg("models") = std::vector<std::string>{"cure", "forest"},
      py::arg("sets") = std::vector<std::string>{"scores", "scores_emb", "scores_emb_usage"}, py::arg("out"),
      py::arg("config") = "");
}
