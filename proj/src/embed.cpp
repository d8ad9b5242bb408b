#include "autoconfidence/embed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "autoconfidence/error.hpp"

namespace autoconfidence::embed {

namespace {

void check_finite(const EmbeddingVector& v, const std::string& what) {
  for (double x : v)
    if (!std::isfinite(x)) throw ValidationError(what + ": non-finite embedding value");
}

Eigen::VectorXd to_vector(const nlohmann::ordered_json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

FileEmbeddingProvider::FileEmbeddingProvider(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embeddings file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("embeddings file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError("embeddings file " + path + " must be a JSON object keyed by DOI");
  std::map<std::string, EmbeddingVector> table;
  for (auto it = j.begin(); it != j.end(); ++it) {
    try {
      table.emplace(it.key(), it.value().get<EmbeddingVector>());
    } catch (const nlohmann::json::exception&) {
      throw ParseError("embeddings file " + path + ": entry " + it.key() + " is not an array of numbers");
    }
  }
  *this = FileEmbeddingProvider(std::move(table));
}

FileEmbeddingProvider::FileEmbeddingProvider(std::map<std::string, EmbeddingVector> table) : table_(std::move(table)) {
  for (const auto& [doi, v] : table_) {
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_ || v.empty()) throw ValidationError("embedding for " + doi + " has inconsistent length");
    check_finite(v, doi);
  }
}

std::optional<EmbeddingVector> FileEmbeddingProvider::get(const std::string& doi) const {
  auto it = table_.find(doi);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

PcaReducer::PcaReducer(Eigen::VectorXd mean, Eigen::MatrixXd components, Eigen::VectorXd explained_variance,
                       double total_variance)
    : mean_(std::move(mean)),
      components_(std::move(components)),
      explained_variance_(std::move(explained_variance)),
      total_variance_(total_variance),
      fitted_(true) {
  if (components_.rows() != mean_.size() || explained_variance_.size() != components_.cols())
    throw ValidationError("pca reducer: inconsistent shapes");
}

std::vector<double> PcaReducer::transform(std::span<const double> v) const {
  if (!fitted_) throw ValidationError("pca reducer: transform before fit");
  if (static_cast<Eigen::Index>(v.size()) != mean_.size())
    throw ValidationError("pca reducer: expected length " + std::to_string(mean_.size()) + ", got " +
                          std::to_string(v.size()));
  const Eigen::Map<const Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
  const Eigen::VectorXd coords = components_.transpose() * (x - mean_);
  return {coords.data(), coords.data() + coords.size()};
}

std::vector<double> PcaReducer::reconstruct(std::span<const double> coords) const {
  if (!fitted_) throw ValidationError("pca reducer: reconstruct before fit");
  if (static_cast<Eigen::Index>(coords.size()) != components_.cols())
    throw ValidationError("pca reducer: wrong number of coordinates");
  const Eigen::Map<const Eigen::VectorXd> c(coords.data(), static_cast<Eigen::Index>(coords.size()));
  const Eigen::VectorXd x = mean_ + components_ * c;
  return {x.data(), x.data() + x.size()};
}

Eigen::VectorXd PcaReducer::explained_variance_ratio() const {
  if (!(total_variance_ > 0.0)) return Eigen::VectorXd::Zero(explained_variance_.size());
  return explained_variance_ / total_variance_;
}

nlohmann::ordered_json PcaReducer::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = "pca";
  j["mean"] = std::vector<double>(mean_.data(), mean_.data() + mean_.size());
  j["components"] = nlohmann::ordered_json::array();
  for (Eigen::Index c = 0; c < components_.cols(); ++c) {
    const Eigen::VectorXd col = components_.col(c);
    j["components"].push_back(std::vector<double>(col.data(), col.data() + col.size()));
  }
  j["explained_variance"] = std::vector<double>(explained_variance_.data(),
                                                explained_variance_.data() + explained_variance_.size());
  j["total_variance"] = total_variance_;
  return j;
}

PcaReducer PcaReducer::from_json(const nlohmann::ordered_json& j) {
  try {
    Eigen::VectorXd mean = to_vector(j.at("mean"));
    const auto& comps = j.at("components");
    Eigen::MatrixXd components(mean.size(), static_cast<Eigen::Index>(comps.size()));
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const Eigen::VectorXd col = to_vector(comps[c]);
      if (col.size() != mean.size()) throw ParseError("reducer: component length mismatch");
      components.col(static_cast<Eigen::Index>(c)) = col;
    }
    return PcaReducer(std::move(mean), std::move(components), to_vector(j.at("explained_variance")),
                      j.at("total_variance").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed reducer: ") + e.what());
  }
}

PcaReducer fit_reducer(const std::vector<EmbeddingVector>& train, std::size_t n_components) {
  if (train.size() < 5) throw ValidationError("fit_reducer: need at least 5 training vectors, got " + std::to_string(train.size()));
  if (n_components == 0) throw ValidationError("fit_reducer: n_components must be positive");
  const std::size_t d = train.front().size();
  for (const auto& v : train) {
    if (v.size() != d) throw ValidationError("fit_reducer: embeddings have mixed lengths");
    check_finite(v, "fit_reducer");
  }
  const auto n = static_cast<Eigen::Index>(train.size());
  const auto dd = static_cast<Eigen::Index>(d);
  const auto k = static_cast<Eigen::Index>(n_components);

  Eigen::MatrixXd x(n, dd);
  for (Eigen::Index i = 0; i < n; ++i)
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(train[static_cast<std::size_t>(i)].data(), dd);
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  x.rowwise() -= mean.transpose();
  const double denom = static_cast<double>(n - 1);
  const double total = x.squaredNorm() / denom;

  Eigen::VectorXd evals;  // descending
  Eigen::MatrixXd comps(dd, 0);
  if (dd <= n) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dd, dd);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0 / denom);
    cov = cov.selfadjointView<Eigen::Lower>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    evals = es.eigenvalues().reverse();
    comps = es.eigenvectors().rowwise().reverse();
  } else {
    // Fewer samples than dimensions: diagonalize the Gram matrix instead.
    const Eigen::MatrixXd gram = x * x.transpose() / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    evals = es.eigenvalues().reverse();
    const Eigen::MatrixXd u = es.eigenvectors().rowwise().reverse();
    comps.resize(dd, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      Eigen::VectorXd v = x.transpose() * u.col(c);
      const double norm = v.norm();
      comps.col(c) = norm > 0.0 ? Eigen::VectorXd(v / norm) : Eigen::VectorXd::Zero(dd);
    }
  }

  const double top = std::max(evals.size() ? evals[0] : 0.0, 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < evals.size(); ++i)
    if (evals[i] > top * 1e-10 && evals[i] > 0.0) ++rank;
  if (rank < k)
    throw ValidationError("fit_reducer: training embeddings have rank " + std::to_string(rank) + ", need " +
                          std::to_string(k));

  Eigen::MatrixXd components = comps.leftCols(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    components.col(c).cwiseAbs().maxCoeff(&arg);
    if (components(arg, c) < 0.0) components.col(c) *= -1.0;
  }
  return PcaReducer(mean, std::move(components), evals.head(k).cwiseMax(0.0), total);
}

FeatureSet parse_feature_set(const std::string& name) {
  if (name == "scores" || name == "scores_only") return FeatureSet::ScoresOnly;
  if (name == "scores_emb") return FeatureSet::ScoresEmb;
  if (name == "scores_emb_usage") return FeatureSet::ScoresEmbUsage;
  throw ValidationError("unknown feature set '" + name + "'");
}

std::string to_string(FeatureSet s) {
  switch (s) {
    case FeatureSet::ScoresOnly: return "scores";
    case FeatureSet::ScoresEmb: return "scores_emb";
    case FeatureSet::ScoresEmbUsage: return "scores_emb_usage";
  }
  return "?";
}

std::size_t feature_count(FeatureSet s, std::size_t embedding_dims) {
  switch (s) {
    case FeatureSet::ScoresOnly: return 5;
    case FeatureSet::ScoresEmb: return 5 + embedding_dims;
    case FeatureSet::ScoresEmbUsage: return 5 + embedding_dims + 3;
  }
  return 0;
}

std::vector<std::string> feature_names(FeatureSet s, std::size_t embedding_dims) {
  std::vector<std::string> names = {"originality", "significance", "presentation", "depth", "interest"};
  if (s != FeatureSet::ScoresOnly)
    for (std::size_t i = 1; i <= embedding_dims; ++i) names.push_back("emb" + std::to_string(i));
  if (s == FeatureSet::ScoresEmbUsage) {
    names.push_back("log1p_abstract_views");
    names.push_back("log1p_fulltext_views");
    names.push_back("log1p_pdf_downloads");
  }
  return names;
}

FeatureVector assemble_features(const llm::EvalScores& scores, std::span<const double> reduced,
                                const std::optional<UsageMetrics>& usage, FeatureSet set) {
  scores.validate();
  FeatureVector f;
  for (int v : scores.values()) f.push_back(static_cast<double>(v));
  if (set == FeatureSet::ScoresOnly) return f;
  if (reduced.empty()) throw ValidationError("assemble_features: feature set needs embedding coordinates");
  f.insert(f.end(), reduced.begin(), reduced.end());
  if (set == FeatureSet::ScoresEmb) return f;
  if (!usage) throw ValidationError("assemble_features: feature set needs usage metrics");
  f.push_back(std::log1p(static_cast<double>(usage->abstract_views)));
  f.push_back(std::log1p(static_cast<double>(usage->fulltext_views)));
  f.push_back(std::log1p(static_cast<double>(usage->pdf_downloads)));
  return f;
}

Scaler Scaler::fit(const std::vector<FeatureVector>& train) {
  if (train.empty()) throw ValidationError("scaler: no training rows");
  const std::size_t p = train.front().size();
  std::vector<double> mean(p, 0.0), sd(p, 1.0);
  for (const auto& row : train)
    if (row.size() != p) throw ValidationError("scaler: ragged rows");
  const double n = static_cast<double>(train.size());
  for (std::size_t j = 0; j < p; ++j) {
    double lo = train.front()[j], hi = lo, sum = 0.0;
    for (const auto& row : train) {
      lo = std::min(lo, row[j]);
      hi = std::max(hi, row[j]);
      sum += row[j];
    }
    if (lo == hi) {
      mean[j] = lo;
      continue;
    }
    mean[j] = sum / n;
    double ss = 0.0;
    for (const auto& row : train) ss += (row[j] - mean[j]) * (row[j] - mean[j]);
    const double s = std::sqrt(ss / n);
    sd[j] = s > 0.0 ? s : 1.0;
  }
  return Scaler(std::move(mean), std::move(sd));
}

FeatureVector Scaler::transform(std::span<const double> row) const {
  if (row.size() != mean_.size()) throw ValidationError("scaler: row width does not match fitted width");
  FeatureVector out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean_[j]) / sd_[j];
  return out;
}

std::vector<FeatureVector> Scaler::transform(const std::vector<FeatureVector>& rows) const {
  std::vector<FeatureVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(transform(r));
  return out;
}

nlohmann::ordered_json Scaler::to_json() const { return {{"mean", mean_}, {"sd", sd_}}; }

Scaler Scaler::from_json(const nlohmann::ordered_json& j) {
  try {
    auto mean = j.at("mean").get<std::vector<double>>();
    auto sd = j.at("sd").get<std::vector<double>>();
    if (mean.size() != sd.size()) throw ParseError("scaler: mean/sd length mismatch");
    return Scaler(std::move(mean), std::move(sd));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed scaler: ") + e.what());
  }
}

std::pair<Scaler, std::vector<FeatureVector>> standardize(const std::vector<FeatureVector>& train,
                                                          const std::vector<FeatureVector>& apply_to) {
  Scaler s = Scaler::fit(train);
  auto out = s.transform(apply_to);
  return {std::move(s), std::move(out)};
}

}  // namespace autoconfidence::embed
