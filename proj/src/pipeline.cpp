#include "autoconfidence/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "autoconfidence/error.hpp"
#include "autoconfidence/http.hpp"
#include "autoconfidence/rng.hpp"

namespace autoconfidence::pipeline {

using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kForestStream = 0xf0;

ordered_json scores_json(const llm::EvalScores& s) {
  ordered_json j;
  const auto v = s.values();
  for (std::size_t k = 0; k < llm::kScoreKeys.size(); ++k) j[std::string(llm::kScoreKeys[k])] = v[k];
  return j;
}

llm::EvalScores scores_from_json(const ordered_json& j) {
  std::array<int, 5> v{};
  for (std::size_t k = 0; k < llm::kScoreKeys.size(); ++k) v[k] = j.at(std::string(llm::kScoreKeys[k])).get<int>();
  return llm::EvalScores::from_values(v);
}

ordered_json usage_json(const UsageMetrics& u) {
  return {{"abstract_views", u.abstract_views}, {"fulltext_views", u.fulltext_views}, {"pdf_downloads", u.pdf_downloads}};
}

UsageMetrics usage_from_json(const ordered_json& j) {
  return {j.at("abstract_views").get<std::int64_t>(), j.at("fulltext_views").get<std::int64_t>(),
          j.at("pdf_downloads").get<std::int64_t>()};
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("write failed for " + path.string());
}

ordered_json read_json(const fs::path& path, const std::string& what) {
  require_file(path, what);
  std::ifstream in(path);
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

template <typename Fn>
void for_each_jsonl(const fs::path& path, const std::string& what, Fn fn) {
  require_file(path, what);
  std::ifstream in(path);
  std::string line;
  long index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(ordered_json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + " record " + std::to_string(index) + ": " + e.what(), index);
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(path.string() + " record " + std::to_string(index) + ": " + e.what(), index);
    }
    ++index;
  }
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

bool needs_embedding(embed::FeatureSet s) { return s != embed::FeatureSet::ScoresOnly; }
bool needs_usage(embed::FeatureSet s) { return s == embed::FeatureSet::ScoresEmbUsage; }

std::string article_text(const PreprintRecord& r) { return "Title: " + r.title + "\nAbstract: " + r.abstract; }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

void require_file(const fs::path& path, const std::string& what) {
  if (path.empty()) throw ValidationError(what + ": no path given");
  if (!fs::is_regular_file(path)) throw ValidationError(what + " not found: " + path.string());
}

void PipelineConfig::validate() const {
  cohort.validate();
  query.validate();
  eval_prompt.validate();
  binary_prompt.validate();
  if (llm_max_in_flight < 1) throw ValidationError("config: llm max_in_flight must be at least 1");
  if (embedding_dims < 1) throw ValidationError("config: embedding_dims must be at least 1");
  cure.validate();
  if (folds < 2) throw ValidationError("config: folds must be at least 2");
  if (n_boot < 1) throw ValidationError("config: n_boot must be positive");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("config: level must lie in (0,1)");
  if (!(risk_horizon > 0.0)) throw ValidationError("config: risk_horizon must be positive");
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    if (j.contains("cohort")) {
      const auto& k = j["cohort"];
      if (k.contains("posted_cutoff")) c.cohort.posted_cutoff = parse_date(k["posted_cutoff"].get<std::string>());
      if (k.contains("censor_date")) c.cohort.censor_date = parse_date(k["censor_date"].get<std::string>());
      c.cohort.min_impact_factor = get_or(k, "min_impact_factor", c.cohort.min_impact_factor);
      if (k.contains("required_quartile"))
        c.cohort.required_quartile = parse_quartile(k["required_quartile"].get<std::string>());
      c.cohort.early_publication_exclusion_days =
          get_or(k, "early_publication_exclusion_days", c.cohort.early_publication_exclusion_days);
      c.early_exclusion = get_or(k, "early_exclusion", c.early_exclusion);
    }
    if (j.contains("search")) {
      const auto& s = j["search"];
      if (s.contains("terms")) c.query.terms = s["terms"].get<std::vector<std::string>>();
      if (s.contains("date_floor")) c.query.date_floor = parse_date(s["date_floor"].get<std::string>());
      if (s.contains("date_ceiling")) c.query.date_ceiling = parse_date(s["date_ceiling"].get<std::string>());
      if (s.contains("remote_config")) c.remote_config = s["remote_config"].get<std::string>();
    }
    if (j.contains("llm")) {
      const auto& l = j["llm"];
      const auto model = get_or<std::string>(l, "model", c.eval_prompt.model_name);
      const auto temperature = get_or(l, "temperature", c.eval_prompt.temperature);
      const auto retries = get_or(l, "max_retries", c.eval_prompt.max_retries);
      c.eval_prompt.model_name = c.binary_prompt.model_name = model;
      c.eval_prompt.temperature = c.binary_prompt.temperature = temperature;
      c.eval_prompt.max_retries = c.binary_prompt.max_retries = retries;
      c.eval_prompt.good_benchmark = get_or(l, "good_benchmark", c.eval_prompt.good_benchmark);
      c.eval_prompt.bad_benchmark = get_or(l, "bad_benchmark", c.eval_prompt.bad_benchmark);
      c.binary_prompt.published_instance = get_or(l, "published_instance", c.binary_prompt.published_instance);
      c.binary_prompt.unpublished_instance = get_or(l, "unpublished_instance", c.binary_prompt.unpublished_instance);
      c.chat.endpoint = get_or(l, "endpoint", c.chat.endpoint);
      c.chat.api_key_env = get_or(l, "api_key_env", c.chat.api_key_env);
      c.llm_max_in_flight = get_or(l, "max_in_flight", c.llm_max_in_flight);
    }
    if (j.contains("features")) c.embedding_dims = get_or(j["features"], "embedding_dims", c.embedding_dims);
    if (j.contains("forest")) {
      const auto& f = j["forest"];
      c.forest.n_trees = get_or(f, "n_trees", c.forest.n_trees);
      c.forest.max_depth = get_or(f, "max_depth", c.forest.max_depth);
      c.forest.min_leaf = get_or(f, "min_leaf", c.forest.min_leaf);
      c.forest.mtry = get_or(f, "mtry", c.forest.mtry);
      c.forest.threads = get_or(f, "threads", c.forest.threads);
    }
    if (j.contains("cure")) {
      const auto& m = j["cure"];
      c.cure.max_em_iters = get_or(m, "max_em_iters", c.cure.max_em_iters);
      c.cure.em_tol = get_or(m, "em_tol", c.cure.em_tol);
      c.cure.ridge = get_or(m, "ridge", c.cure.ridge);
      if (m.contains("risk_score")) c.risk = cure::parse_risk_score(m["risk_score"].get<std::string>());
      c.risk_horizon = get_or(m, "risk_horizon", c.risk_horizon);
    }
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      c.folds = get_or(e, "folds", c.folds);
      c.n_boot = get_or(e, "n_boot", c.n_boot);
      c.level = get_or(e, "level", c.level);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  require_file(path, "config file");
  std::ifstream in(path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

ordered_json to_json(const FeatureRow& row) {
  ordered_json j;
  j["doi"] = row.doi;
  j["label"] = row.label ? 1 : 0;
  j["time_days"] = row.time_days;
  j["event"] = row.event ? 1 : 0;
  j["scores"] = scores_json(row.scores);
  j["embedding"] = row.embedding;
  j["usage"] = row.usage ? usage_json(*row.usage) : ordered_json(nullptr);
  j["llm_publish"] = row.llm_publish ? ordered_json(*row.llm_publish ? 1 : 0) : ordered_json(nullptr);
  j["feature_set"] = row.feature_set;
  j["features"] = row.features;
  return j;
}

FeatureRow feature_row_from_json(const ordered_json& j) {
  FeatureRow r;
  r.doi = j.at("doi").get<std::string>();
  r.label = j.at("label").get<int>() != 0;
  r.time_days = j.at("time_days").get<long>();
  r.event = j.at("event").get<int>() != 0;
  r.scores = scores_from_json(j.at("scores"));
  r.embedding = j.value("embedding", std::vector<double>{});
  if (j.contains("usage") && !j["usage"].is_null()) r.usage = usage_from_json(j["usage"]);
  if (j.contains("llm_publish") && !j["llm_publish"].is_null()) r.llm_publish = j["llm_publish"].get<int>() != 0;
  r.feature_set = j.value("feature_set", std::string{});
  r.features = j.value("features", std::vector<double>{});
  if (r.doi.empty()) throw ValidationError("feature row without doi");
  if (r.time_days < 1) throw ValidationError("feature row " + r.doi + ": time_days must be positive");
  if (r.event != r.label) throw ValidationError("feature row " + r.doi + ": event and label disagree");
  return r;
}

std::vector<FeatureRow> read_feature_rows(const fs::path& path) {
  std::vector<FeatureRow> rows;
  for_each_jsonl(path, "features file", [&](const ordered_json& j) { rows.push_back(feature_row_from_json(j)); });
  if (rows.empty()) throw ValidationError("features file is empty: " + path.string());
  return rows;
}

void write_feature_rows(const fs::path& path, const std::vector<FeatureRow>& rows) {
  std::string text;
  for (const auto& r : rows) text += to_json(r).dump() + "\n";
  write_text(path, text);
}

ordered_json to_json(const ScoreEntry& e) {
  ordered_json j;
  j["doi"] = e.doi;
  j["scores"] = scores_json(e.scores);
  if (e.publish) j["publish"] = *e.publish ? 1 : 0;
  return j;
}

ScoreEntry score_entry_from_json(const ordered_json& j) {
  ScoreEntry e;
  e.doi = j.at("doi").get<std::string>();
  e.scores = scores_from_json(j.at("scores"));
  if (j.contains("publish") && !j["publish"].is_null()) e.publish = j["publish"].get<int>() != 0;
  return e;
}

std::vector<ScoreEntry> read_scores(const fs::path& path) {
  std::vector<ScoreEntry> out;
  for_each_jsonl(path, "scores file", [&](const ordered_json& j) { out.push_back(score_entry_from_json(j)); });
  return out;
}

FeaturePipeline FeaturePipeline::fit(const std::vector<const FeatureRow*>& train, embed::FeatureSet set,
                                     std::size_t embedding_dims) {
  if (train.empty()) throw ValidationError("feature pipeline: no training rows");
  FeaturePipeline p;
  p.set = set;
  if (needs_embedding(set)) {
    std::vector<embed::EmbeddingVector> emb;
    emb.reserve(train.size());
    for (const auto* r : train) {
      if (r->embedding.empty()) throw ValidationError("feature pipeline: row " + r->doi + " has no embedding");
      emb.push_back(r->embedding);
    }
    p.reducer = embed::fit_reducer(emb, embedding_dims);
  }
  std::vector<FeatureVector> raw;
  raw.reserve(train.size());
  for (const auto* r : train) raw.push_back(p.raw(*r));
  p.scaler = embed::Scaler::fit(raw);
  return p;
}

FeatureVector FeaturePipeline::raw(const FeatureRow& row) const {
  std::vector<double> reduced;
  if (reducer) {
    if (row.embedding.size() != reducer->input_dim())
      throw ValidationError("row " + row.doi + ": embedding length " + std::to_string(row.embedding.size()) +
                            " does not match reducer input " + std::to_string(reducer->input_dim()));
    reduced = reducer->transform(row.embedding);
  }
  if (needs_usage(set) && !row.usage) throw ValidationError("row " + row.doi + ": usage metrics missing");
  return embed::assemble_features(row.scores, reduced, row.usage, set);
}

FeatureVector FeaturePipeline::transform(const FeatureRow& row) const { return scaler.transform(raw(row)); }

std::vector<std::string> FeaturePipeline::names() const {
  return embed::feature_names(set, reducer ? reducer->output_dim() : 4);
}

ordered_json FeaturePipeline::to_json() const {
  ordered_json j;
  j["feature_set"] = embed::to_string(set);
  j["feature_names"] = names();
  j["reducer"] = reducer ? reducer->to_json() : ordered_json(nullptr);
  j["scaler"] = scaler.to_json();
  return j;
}

FeaturePipeline FeaturePipeline::from_json(const ordered_json& j) {
  FeaturePipeline p;
  p.set = embed::parse_feature_set(j.at("feature_set").get<std::string>());
  if (j.contains("reducer") && !j["reducer"].is_null()) p.reducer = embed::PcaReducer::from_json(j["reducer"]);
  if (needs_embedding(p.set) && !p.reducer) throw ValidationError("feature pipeline: set needs a reducer");
  p.scaler = embed::Scaler::from_json(j.at("scaler"));
  return p;
}

double TrainedModel::confidence(const FeatureRow& row) const {
  const auto x = features.transform(row);
  if (cure) return cure::predict_confidence(*cure, x);
  if (forest) return forest->predict_proba(x);
  throw ValidationError("model has no fitted parameters");
}

std::optional<double> TrainedModel::risk_of(const FeatureRow& row) const {
  if (!cure) return std::nullopt;
  return cure::risk_score(*cure, features.transform(row), risk, risk_horizon);
}

ordered_json TrainedModel::to_json() const {
  ordered_json j;
  j["model"] = kind;
  j["features"] = features.to_json();
  if (cure) {
    j["risk_score"] = cure::to_string(risk);
    j["risk_horizon"] = risk_horizon;
    j["params"] = cure::to_json(*cure, diagnostics ? &*diagnostics : nullptr);
  } else if (forest) {
    j["params"] = forest->to_json();
  }
  return j;
}

TrainedModel TrainedModel::from_json(const ordered_json& j) {
  TrainedModel m;
  try {
    m.kind = j.at("model").get<std::string>();
    m.features = FeaturePipeline::from_json(j.at("features"));
    if (m.kind == "cure") {
      m.cure = cure::params_from_json(j.at("params"));
      if (const auto& d = j.at("params"); d.contains("diagnostics")) {
        cure::FitDiagnostics diag;
        diag.iterations = d["diagnostics"].at("iterations").get<int>();
        diag.converged = d["diagnostics"].at("converged").get<bool>();
        diag.log_likelihood = d["diagnostics"].at("log_likelihood").get<double>();
        diag.warning = d["diagnostics"].value("warning", std::string());
        m.diagnostics = diag;
      }
      m.risk = cure::parse_risk_score(j.value("risk_score", std::string("incidence_times_hazard")));
      m.risk_horizon = j.value("risk_horizon", 365.0);
    } else if (m.kind == "forest") {
      m.forest = forest::Forest::from_json(j.at("params"));
    } else {
      throw ValidationError("unknown model kind '" + m.kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  const std::size_t p = m.features.names().size();
  if ((m.cure && m.cure->n_features != p) || (m.forest && m.forest->n_features() != p))
    throw ValidationError("model file: feature count does not match its feature pipeline");
  return m;
}

TrainedModel train_model(const std::string& kind, const std::vector<const FeatureRow*>& train,
                         embed::FeatureSet set, const PipelineConfig& cfg) {
  if (kind != "cure" && kind != "forest") throw ValidationError("unknown model '" + kind + "' (cure|forest)");
  TrainedModel m;
  m.kind = kind;
  m.features = FeaturePipeline::fit(train, set, cfg.embedding_dims);
  std::vector<FeatureVector> x;
  x.reserve(train.size());
  for (const auto* r : train) x.push_back(m.features.transform(*r));
  if (kind == "cure") {
    std::vector<SurvivalObservation> obs;
    obs.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) obs.push_back({train[i]->time_days, train[i]->event, x[i]});
    auto [params, diag] = cure::fit_em(cure::to_data(obs), cfg.cure, m.features.names());
    m.cure = std::move(params);
    m.diagnostics = std::move(diag);
    m.risk = cfg.risk;
    m.risk_horizon = cfg.risk_horizon;
  } else {
    std::vector<bool> labels;
    labels.reserve(train.size());
    for (const auto* r : train) labels.push_back(r->label);
    m.forest = forest::fit_forest(x, labels, cfg.forest);
  }
  return m;
}

eval::CrossvalResult crossval_model(const std::vector<FeatureRow>& rows, const std::string& kind,
                                    embed::FeatureSet set, const PipelineConfig& cfg) {
  eval::CrossvalData data;
  for (const auto& r : rows) {
    data.labels.push_back(r.label);
    data.times.push_back(static_cast<double>(r.time_days));
    data.events.push_back(r.event);
  }
  auto fit_predict = [&](const Fold& train, const Fold& test, std::size_t fold) {
    std::vector<const FeatureRow*> tr;
    tr.reserve(train.size());
    for (auto i : train) tr.push_back(&rows[i]);
    PipelineConfig fold_cfg = cfg;
    fold_cfg.forest.seed = derive_seed(cfg.seed, kForestStream + 1 + fold);
    const auto model = train_model(kind, tr, set, fold_cfg);
    eval::FoldPrediction pred;
    for (auto i : test) {
      pred.scores.push_back(model.confidence(rows[i]));
      if (auto r = model.risk_of(rows[i])) pred.risks.push_back(*r);
    }
    return pred;
  };
  auto res = eval::crossval(data, fit_predict, cfg.folds, cfg.seed, cfg.n_boot, cfg.level);
  res.row.model = kind;
  res.row.feature_set = embed::to_string(set);
  if (kind != "cure") res.row.c_index.reset();
  return res;
}

void cmd_ingest(const IngestArgs& args, const PipelineConfig& cfg) {
  if (args.out.empty()) throw ValidationError("ingest: --out is required");
  const bool remote = args.source.rfind("http://", 0) == 0 || args.source.rfind("https://", 0) == 0;
  if (remote && args.mock) throw ValidationError("ingest: --mock requires a fixture directory as --source");
  if (!remote && !fs::is_directory(args.source)) throw ValidationError("ingest source not found: " + args.source);
  ingest::SearchQuery query = cfg.query;
  if (args.terms_file) {
    require_file(*args.terms_file, "terms file");
    query.terms = ingest::read_terms_file(*args.terms_file);
  }
  auto source = ingest::open_source(args.source, cfg.remote_config);
  const auto records = ingest::ingest_records(query, *source);
  ensure_parent(args.out);
  write_records_file(args.out.string(), records);
}

std::size_t cmd_score(const ScoreArgs& args, const PipelineConfig& cfg) {
  require_file(args.in, "cohort file");
  if (args.out.empty()) throw ValidationError("score: --out is required");
  const auto records = read_records_file(args.in.string());

  std::vector<llm::Article> articles;
  articles.reserve(records.size());
  for (const auto& r : records) articles.push_back({r.preprint_doi, article_text(r), ""});

  std::unique_ptr<llm::ChatClient> client;
  if (args.live) {
    const char* key = std::getenv(cfg.chat.api_key_env.c_str());
    if (!key || !*key) throw ValidationError("score --live: environment variable " + cfg.chat.api_key_env + " is not set");
    client = std::make_unique<llm::HttpChatClient>(cfg.chat, std::make_shared<http::HttplibTransport>());
  } else {
    client = std::make_unique<llm::MockChatClient>();
  }

  const auto evals = llm::evaluate_batch(articles, cfg.eval_prompt, *client, cfg.llm_max_in_flight);
  std::map<std::string, bool> publish;
  std::vector<llm::BatchFailure> binary_failures;
  if (args.binary) {
    const auto preds = llm::predict_batch(articles, cfg.binary_prompt, *client, cfg.llm_max_in_flight);
    for (const auto& [id, p] : preds.results) publish[id] = p.publish;
    binary_failures = preds.failures;
  }

  std::string text;
  for (const auto& [id, s] : evals.results) {
    ScoreEntry e{id, s, std::nullopt};
    if (auto it = publish.find(id); it != publish.end()) e.publish = it->second;
    text += to_json(e).dump() + "\n";
  }
  write_text(args.out, text);

  ordered_json manifest = ordered_json::array();
  for (const auto& f : evals.failures)
    manifest.push_back({{"doi", f.id}, {"task", "evaluate"}, {"attempts", f.attempts}, {"error", f.error}});
  for (const auto& f : binary_failures)
    manifest.push_back({{"doi", f.id}, {"task", "binary"}, {"attempts", f.attempts}, {"error", f.error}});
  write_text(sibling(args.out, ".failures.json"), manifest.dump(2) + "\n");
  return evals.failures.size() + binary_failures.size();
}

void cmd_featurize(const FeaturizeArgs& args, const PipelineConfig& cfg) {
  require_file(args.cohort, "cohort file");
  require_file(args.scores, "scores file");
  if (needs_embedding(args.set) || !args.embeddings.empty()) require_file(args.embeddings, "embeddings file");
  if (args.out.empty()) throw ValidationError("featurize: --out is required");

  auto cohort = build_cohort(read_records_file(args.cohort.string()), cfg.cohort);
  if (cfg.early_exclusion) cohort = apply_early_publication_exclusion(std::move(cohort), cfg.cohort);

  std::map<std::string, ScoreEntry> scores;
  for (auto& e : read_scores(args.scores)) scores.emplace(e.doi, std::move(e));
  std::optional<embed::FileEmbeddingProvider> provider;
  if (!args.embeddings.empty()) provider.emplace(args.embeddings.string());

  std::vector<FeatureRow> rows;
  ordered_json skipped = ordered_json::array();
  for (const auto& lr : cohort) {
    const auto& rec = lr.record;
    auto skip = [&](const char* reason) { skipped.push_back({{"doi", rec.preprint_doi}, {"reason", reason}}); };
    auto s = scores.find(rec.preprint_doi);
    if (s == scores.end()) {
      skip("no LLM scores");
      continue;
    }
    FeatureRow row;
    row.doi = rec.preprint_doi;
    row.scores = s->second.scores;
    row.llm_publish = s->second.publish;
    if (provider) {
      if (auto v = provider->get(rec.preprint_doi)) row.embedding = std::move(*v);
    }
    if (needs_embedding(args.set) && row.embedding.empty()) {
      skip("no embedding");
      continue;
    }
    row.usage = rec.usage_3mo;
    if (needs_usage(args.set) && !row.usage) {
      skip("no usage metrics");
      continue;
    }
    const auto obs = to_survival(rec, lr.label, {}, cfg.cohort);
    row.time_days = obs.time_days;
    row.event = obs.event;
    row.label = lr.label == OutcomeLabel::Published;
    row.feature_set = embed::to_string(args.set);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("featurize: no cohort records have the inputs the feature set needs");

  std::vector<const FeatureRow*> all;
  for (const auto& r : rows) all.push_back(&r);
  const auto pipe = FeaturePipeline::fit(all, args.set, cfg.embedding_dims);
  for (auto& r : rows) r.features = pipe.raw(r);

  write_feature_rows(args.out, rows);
  write_text(sibling(args.out, ".skipped.json"), skipped.dump(2) + "\n");
  if (pipe.reducer) write_text(sibling(args.out, ".reducer.json"), pipe.reducer->to_json().dump(2) + "\n");
}

void cmd_fit(const FitArgs& args, const PipelineConfig& cfg) {
  require_file(args.features, "features file");
  if (args.out.empty()) throw ValidationError("fit: --out is required");
  const auto rows = read_feature_rows(args.features);
  if (rows.empty()) throw ValidationError("fit: no rows in " + args.features.string());
  const auto set = args.set ? *args.set : embed::parse_feature_set(rows.front().feature_set);
  std::vector<const FeatureRow*> all;
  for (const auto& r : rows) all.push_back(&r);
  PipelineConfig fit_cfg = cfg;
  fit_cfg.forest.seed = derive_seed(cfg.seed, kForestStream);
  const auto model = train_model(args.model, all, set, fit_cfg);
  write_text(args.out, model.to_json().dump(2) + "\n");
}

void cmd_predict(const PredictArgs& args) {
  const auto model = TrainedModel::from_json(read_json(args.model, "model file"));
  require_file(args.features, "features file");
  if (args.out.empty()) throw ValidationError("predict: --out is required");
  const auto rows = read_feature_rows(args.features);
  std::string text;
  for (const auto& r : rows) {
    ordered_json j;
    j["doi"] = r.doi;
    j["confidence"] = model.confidence(r);
    if (auto risk = model.risk_of(r)) j["risk"] = *risk;
    j["scores"] = scores_json(r.scores);
    text += j.dump() + "\n";
  }
  write_text(args.out, text);
}

eval::EvalReport cmd_evaluate(const EvaluateArgs& args, const PipelineConfig& cfg) {
  require_file(args.features, "features file");
  if (args.out.empty()) throw ValidationError("evaluate: --out is required");
  if (args.models.empty() || args.sets.empty()) throw ValidationError("evaluate: need at least one model and set");
  for (const auto& m : args.models)
    if (m != "cure" && m != "forest") throw ValidationError("unknown model '" + m + "' (cure|forest)");
  const auto rows = read_feature_rows(args.features);

  eval::EvalReport report;
  report.seed = cfg.seed;
  report.folds = static_cast<int>(cfg.folds);
  report.n_boot = cfg.n_boot;
  report.level = cfg.level;

  fs::create_directories(args.out);
  for (const auto& model : args.models) {
    for (const auto set : args.sets) {
      auto res = crossval_model(rows, model, set, cfg);
      std::string csv = "threshold,fpr,tpr\n";
      for (const auto& p : res.row.roc)
        csv += format_double(p.threshold) + "," + format_double(p.fpr) + "," + format_double(p.tpr) + "\n";
      write_text(args.out / ("roc_" + model + "_" + embed::to_string(set) + ".csv"), csv);
      report.rows.push_back(std::move(res.row));
    }
  }

  std::vector<llm::EvalScores> pub, unpub;
  for (const auto& r : rows) (r.label ? pub : unpub).push_back(r.scores);
  if (pub.size() >= 2 && unpub.size() >= 2) report.group_comparison = eval::group_compare(pub, unpub);

  if (std::all_of(rows.begin(), rows.end(), [](const FeatureRow& r) { return r.llm_publish.has_value(); })) {
    std::size_t hit = 0;
    for (const auto& r : rows) hit += (*r.llm_publish == r.label) ? 1 : 0;
    report.llm_direct_accuracy = static_cast<double>(hit) / static_cast<double>(rows.size());
  }

  write_text(args.out / "report.txt", eval::render_report(report));
  write_text(args.out / "report.json", eval::to_json(report).dump(2) + "\n");
  return report;
}

std::string cmd_report(const ReportArgs& args) {
  const auto report = eval::report_from_json(read_json(args.in, "report file"));
  auto text = eval::render_report(report);
  if (args.out) write_text(*args.out, text);
  return text;
}

}  // namespace autoconfidence::pipeline
