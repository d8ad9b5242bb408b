#include "autoconfidence/cure_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "autoconfidence/error.hpp"

namespace autoconfidence::cure {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(1 + exp(z)) without overflow.
double log1p_exp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double logistic(double z) {
  if (z < 0) {
    const double e = std::exp(z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(-z));
}

double linear_predictor(const Eigen::VectorXd& coef, std::span<const double> x, bool intercept) {
  const Eigen::Index offset = intercept ? 1 : 0;
  if (static_cast<std::size_t>(coef.size() - offset) != x.size())
    throw ValidationError("coefficient length " + std::to_string(coef.size()) + " does not match " +
                          std::to_string(x.size()) + " covariates");
  double z = intercept ? coef[0] : 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += coef[static_cast<Eigen::Index>(i) + offset] * x[i];
  return z;
}

std::vector<double> select(std::span<const double> x, const std::vector<std::size_t>& cols) {
  std::vector<double> out;
  out.reserve(cols.size());
  for (auto c : cols) {
    if (c >= x.size()) throw ValidationError("feature column " + std::to_string(c) + " out of range");
    out.push_back(x[c]);
  }
  return out;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= static_cast<std::size_t>(x.cols()))
      throw ValidationError("feature column " + std::to_string(cols[j]) + " out of range");
    out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(cols[j]));
  }
  return out;
}

std::vector<std::size_t> all_columns(std::size_t p) {
  std::vector<std::size_t> cols(p);
  std::iota(cols.begin(), cols.end(), 0);
  return cols;
}

// Observation indices sorted by decreasing time; ties keep index order.
std::vector<Eigen::Index> by_time_desc(const Eigen::VectorXd& time) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(time.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return time[a] > time[b]; });
  return order;
}

void check_cox_inputs(const Eigen::VectorXd& beta, const Eigen::VectorXd& time,
                      const std::vector<bool>& event, const Eigen::MatrixXd& x,
                      const Eigen::VectorXd& weights) {
  const auto n = time.size();
  if (static_cast<std::size_t>(n) != event.size() || x.rows() != n || weights.size() != n)
    throw ValidationError("cox: inconsistent observation counts");
  if (beta.size() != x.cols()) throw ValidationError("cox: beta length does not match covariates");
  bool any = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(weights[i] >= 0.0 && weights[i] <= 1.0)) throw ValidationError("cox: weights must lie in [0,1]");
    any = any || weights[i] > 0.0;
  }
  if (!any) throw ValidationError("cox: all weights are zero");
}

struct NewtonResult {
  Eigen::VectorXd theta;
  double value;
};

// Maximizes a concave objective by Newton-Raphson with step halving. Steps are
// only accepted when they do not decrease the objective.
NewtonResult newton_maximize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*, Eigen::MatrixXd*)>& f,
    Eigen::VectorXd theta, int max_iters, double tol) {
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  double value = f(theta, &grad, &hess);
  if (!std::isfinite(value)) throw NumericalError("newton: objective not finite at start");
  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-hess);
    Eigen::VectorXd step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      // Singular curvature: fall back to a scaled gradient step.
      step = grad / std::max(1.0, grad.cwiseAbs().maxCoeff());
    }
    if (step.cwiseAbs().maxCoeff() < tol) break;

    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving) {
      const Eigen::VectorXd candidate = theta + scale * step;
      const double cand_value = f(candidate, nullptr, nullptr);
      if (std::isfinite(cand_value) && cand_value >= value) {
        theta = candidate;
        accepted = true;
        break;
      }
      scale *= 0.5;
      if ((scale * step).cwiseAbs().maxCoeff() < tol) break;
    }
    if (!accepted) {
      if ((scale * step).cwiseAbs().maxCoeff() < tol) break;  // numerically at the optimum
      throw NumericalError("newton: step halving failed after 30 halvings");
    }
    const double previous = value;
    value = f(theta, &grad, &hess);
    if ((scale * step).cwiseAbs().maxCoeff() < tol || std::abs(value - previous) <= 1e-15 * (1.0 + std::abs(value)))
      break;
  }
  return {theta, value};
}

}  // namespace

double BaselineHazard::cumulative(double t) const {
  auto it = std::upper_bound(event_times.begin(), event_times.end(), t);
  if (it == event_times.begin()) return 0.0;
  return cum_hazard[static_cast<std::size_t>(it - event_times.begin()) - 1];
}

double BaselineHazard::jump_at(double t) const {
  auto it = std::lower_bound(event_times.begin(), event_times.end(), t);
  if (it == event_times.end() || *it != t) return 0.0;
  const auto k = static_cast<std::size_t>(it - event_times.begin());
  return k == 0 ? cum_hazard[0] : cum_hazard[k] - cum_hazard[k - 1];
}

void BaselineHazard::validate() const {
  if (event_times.size() != cum_hazard.size()) throw ValidationError("baseline: length mismatch");
  for (std::size_t i = 0; i < event_times.size(); ++i) {
    if (!(event_times[i] > 0.0) || !std::isfinite(cum_hazard[i]) || cum_hazard[i] < 0.0)
      throw ValidationError("baseline: invalid step");
    if (i > 0 && (!(event_times[i] > event_times[i - 1]) || cum_hazard[i] < cum_hazard[i - 1]))
      throw ValidationError("baseline: steps must be increasing in time and nondecreasing in hazard");
  }
}

void CureModelParams::validate() const {
  if (static_cast<std::size_t>(gamma.size()) != incidence_columns.size() + 1)
    throw ValidationError("cure params: gamma must have one entry per incidence feature plus intercept");
  if (static_cast<std::size_t>(beta.size()) != latency_columns.size())
    throw ValidationError("cure params: beta must have one entry per latency feature");
  if (!gamma.allFinite() || !beta.allFinite()) throw ValidationError("cure params: non-finite coefficient");
  for (auto c : incidence_columns)
    if (c >= n_features) throw ValidationError("cure params: incidence column out of range");
  for (auto c : latency_columns)
    if (c >= n_features) throw ValidationError("cure params: latency column out of range");
  baseline.validate();
}

void FitConfig::validate() const {
  if (max_em_iters <= 0 || !(em_tol > 0) || newton_max_iters <= 0 || !(newton_tol > 0) || !(ridge > 0))
    throw ValidationError("fit config: all iteration limits and tolerances must be positive");
}

void SurvivalData::validate() const {
  if (static_cast<std::size_t>(time.size()) != event.size() || static_cast<std::size_t>(x.rows()) != event.size())
    throw ValidationError("survival data: inconsistent sizes");
  for (Eigen::Index i = 0; i < time.size(); ++i)
    if (!(time[i] > 0.0) || !std::isfinite(time[i])) throw ValidationError("survival data: times must be positive");
  if (!x.allFinite()) throw ValidationError("survival data: non-finite covariate");
}

SurvivalData to_data(const std::vector<SurvivalObservation>& obs) {
  SurvivalData d;
  const auto n = static_cast<Eigen::Index>(obs.size());
  const Eigen::Index p = obs.empty() ? 0 : static_cast<Eigen::Index>(obs.front().features.size());
  d.time.resize(n);
  d.x.resize(n, p);
  d.event.resize(obs.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(o.features.size()) != p) throw ValidationError("survival data: ragged features");
    d.time[i] = static_cast<double>(o.time_days);
    d.event[static_cast<std::size_t>(i)] = o.event;
    for (Eigen::Index j = 0; j < p; ++j) d.x(i, j) = o.features[static_cast<std::size_t>(j)];
  }
  return d;
}

double incidence_prob(const Eigen::VectorXd& gamma, std::span<const double> x) {
  const double z = linear_predictor(gamma, x, true);
  if (!std::isfinite(z)) throw ValidationError("incidence_prob: non-finite linear predictor");
  return logistic(z);
}

double hazard_multiplier(const Eigen::VectorXd& beta, std::span<const double> x) {
  return std::exp(linear_predictor(beta, x, false));
}

double latency_survival(const CureModelParams& params, std::span<const double> x, double t) {
  if (!(t >= 0.0)) throw ValidationError("latency_survival: t must be nonnegative");
  if (!params.baseline.empty() && t > params.baseline.last_event_time()) return 0.0;
  const double h0 = params.baseline.cumulative(t);
  if (h0 == 0.0) return 1.0;
  const auto xl = select(x, params.latency_columns);
  return std::exp(-h0 * hazard_multiplier(params.beta, xl));
}

double mixture_survival(const CureModelParams& params, std::span<const double> x, double t) {
  const double pi = predict_confidence(params, x);
  return pi * latency_survival(params, x, t) + (1.0 - pi);
}

double predict_confidence(const CureModelParams& params, std::span<const double> x) {
  return incidence_prob(params.gamma, select(x, params.incidence_columns));
}

std::vector<std::pair<double, double>> predict_survival_curve(const CureModelParams& params,
                                                              std::span<const double> x,
                                                              std::span<const double> grid) {
  std::vector<std::pair<double, double>> out;
  out.reserve(grid.size());
  for (double t : grid) out.emplace_back(t, mixture_survival(params, x, t));
  return out;
}

CoxLikelihood cox_partial_loglik(const Eigen::VectorXd& beta, const Eigen::VectorXd& time,
                                 const std::vector<bool>& event, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& weights) {
  check_cox_inputs(beta, time, event, x, weights);
  const Eigen::Index p = x.cols();
  const Eigen::VectorXd eta = x * beta;
  const double shift = eta.size() ? eta.maxCoeff() : 0.0;

  CoxLikelihood out;
  out.gradient = Eigen::VectorXd::Zero(p);
  out.hessian = Eigen::MatrixXd::Zero(p, p);

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);

  const auto order = by_time_desc(time);
  std::size_t g = 0;
  while (g < order.size()) {
    std::size_t end = g;
    while (end < order.size() && time[order[end]] == time[order[g]]) ++end;
    // The tied group joins the risk set before its events are scored.
    for (std::size_t k = g; k < end; ++k) {
      const auto i = order[k];
      const double r = weights[i] * std::exp(eta[i] - shift);
      s0 += r;
      s1.noalias() += r * x.row(i).transpose();
      s2.noalias() += r * x.row(i).transpose() * x.row(i);
    }
    double d = 0.0;
    for (std::size_t k = g; k < end; ++k) {
      const auto i = order[k];
      if (!event[static_cast<std::size_t>(i)] || weights[i] == 0.0) continue;
      d += weights[i];
      out.value += weights[i] * eta[i];
      out.gradient.noalias() += weights[i] * x.row(i).transpose();
    }
    if (d > 0.0) {
      const Eigen::VectorXd mean = s1 / s0;
      out.value -= d * (std::log(s0) + shift);
      out.gradient.noalias() -= d * mean;
      out.hessian.noalias() -= d * (s2 / s0 - mean * mean.transpose());
    }
    g = end;
  }
  return out;
}

BaselineHazard breslow_baseline(const Eigen::VectorXd& beta, const Eigen::VectorXd& time,
                                const std::vector<bool>& event, const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& weights) {
  check_cox_inputs(beta, time, event, x, weights);
  const Eigen::VectorXd eta = x * beta;
  const double shift = eta.size() ? eta.maxCoeff() : 0.0;

  std::vector<double> times, jumps;
  double s0 = 0.0;
  const auto order = by_time_desc(time);
  std::size_t g = 0;
  while (g < order.size()) {
    std::size_t end = g;
    while (end < order.size() && time[order[end]] == time[order[g]]) ++end;
    double d = 0.0;
    for (std::size_t k = g; k < end; ++k) {
      const auto i = order[k];
      s0 += weights[i] * std::exp(eta[i] - shift);
      if (event[static_cast<std::size_t>(i)]) d += weights[i];
    }
    if (d > 0.0) {
      times.push_back(time[order[g]]);
      jumps.push_back(d / s0 * std::exp(-shift));
    }
    g = end;
  }
  BaselineHazard h;
  h.event_times.assign(times.rbegin(), times.rend());
  h.cum_hazard.resize(jumps.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    acc += jumps[jumps.size() - 1 - k];
    h.cum_hazard[k] = acc;
  }
  return h;
}

namespace {

struct Components {
  Eigen::MatrixXd inc;  // with leading column of ones
  Eigen::MatrixXd lat;
};

Components design(const SurvivalData& data, const CureModelParams& params) {
  Components c;
  const Eigen::MatrixXd xi = select_columns(data.x, params.incidence_columns);
  c.inc.resize(xi.rows(), xi.cols() + 1);
  c.inc.col(0).setOnes();
  c.inc.rightCols(xi.cols()) = xi;
  c.lat = select_columns(data.x, params.latency_columns);
  return c;
}

double penalty(const CureModelParams& params, double ridge) {
  return 0.5 * ridge * (params.gamma.tail(params.gamma.size() - 1).squaredNorm() + params.beta.squaredNorm());
}

// log S(t|x) under the zero-tail convention.
double log_latency_survival(const BaselineHazard& h, double eta, double t) {
  if (!h.empty() && t > h.last_event_time()) return kNegInf;
  return -h.cumulative(t) * std::exp(eta);
}

double observed_loglik_impl(const CureModelParams& params, const SurvivalData& data, const Components& c,
                            double ridge) {
  const Eigen::VectorXd z = c.inc * params.gamma;
  const Eigen::VectorXd eta = c.lat * params.beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double log_pi = -log1p_exp(-z[i]);
    const double log_cured = -log1p_exp(z[i]);
    const double log_s = log_latency_survival(params.baseline, eta[i], data.time[i]);
    if (data.event[static_cast<std::size_t>(i)]) {
      const double jump = params.baseline.jump_at(data.time[i]);
      if (!(jump > 0.0)) return kNegInf;
      ll += log_pi + std::log(jump) + eta[i] + log_s;
    } else if (log_s == kNegInf) {
      ll += log_cured;
    } else {
      const double a = log_cured, b = log_pi + log_s;
      const double m = std::max(a, b);
      ll += m + std::log(std::exp(a - m) + std::exp(b - m));
    }
  }
  return ll - penalty(params, ridge);
}

Eigen::VectorXd e_step_impl(const CureModelParams& params, const SurvivalData& data, const Components& c) {
  const Eigen::VectorXd z = c.inc * params.gamma;
  const Eigen::VectorXd eta = c.lat * params.beta;
  Eigen::VectorXd w(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (data.event[static_cast<std::size_t>(i)]) {
      w[i] = 1.0;
      continue;
    }
    const double log_s = log_latency_survival(params.baseline, eta[i], data.time[i]);
    if (log_s == kNegInf) {
      w[i] = 0.0;
      continue;
    }
    // pi S / (pi S + 1 - pi) on the log scale.
    const double a = -log1p_exp(-z[i]) + log_s;
    const double b = -log1p_exp(z[i]);
    w[i] = logistic(a - b);
  }
  return w;
}

Eigen::VectorXd fit_incidence(const Eigen::MatrixXd& z, const Eigen::VectorXd& target, Eigen::VectorXd gamma,
                              double ridge, const FitConfig& cfg) {
  const Eigen::Index q = z.cols();
  auto objective = [&](const Eigen::VectorXd& g, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    const Eigen::VectorXd lin = z * g;
    double value = 0.0;
    for (Eigen::Index i = 0; i < lin.size(); ++i) value += target[i] * lin[i] - log1p_exp(lin[i]);
    value -= 0.5 * ridge * g.tail(q - 1).squaredNorm();
    if (grad) {
      Eigen::VectorXd pi(lin.size()), curv(lin.size());
      for (Eigen::Index i = 0; i < lin.size(); ++i) {
        pi[i] = logistic(lin[i]);
        curv[i] = pi[i] * (1.0 - pi[i]);
      }
      *grad = z.transpose() * (target - pi);
      *hess = -(z.transpose() * curv.asDiagonal() * z);
      for (Eigen::Index j = 1; j < q; ++j) {
        (*grad)[j] -= ridge * g[j];
        (*hess)(j, j) -= ridge;
      }
    }
    return value;
  };
  return newton_maximize(objective, std::move(gamma), cfg.newton_max_iters, cfg.newton_tol).theta;
}

Eigen::VectorXd fit_latency(const SurvivalData& data, const Eigen::MatrixXd& lat, const Eigen::VectorXd& w,
                            Eigen::VectorXd beta, double ridge, const FitConfig& cfg) {
  if (lat.cols() == 0) return beta;
  auto objective = [&](const Eigen::VectorXd& b, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    auto pl = cox_partial_loglik(b, data.time, data.event, lat, w);
    if (grad) {
      *grad = pl.gradient - ridge * b;
      *hess = pl.hessian;
      hess->diagonal().array() -= ridge;
    }
    return pl.value - 0.5 * ridge * b.squaredNorm();
  };
  return newton_maximize(objective, std::move(beta), cfg.newton_max_iters, cfg.newton_tol).theta;
}

}  // namespace

double observed_loglik(const CureModelParams& params, const SurvivalData& data, double ridge) {
  return observed_loglik_impl(params, data, design(data, params), ridge);
}

Eigen::VectorXd e_step(const CureModelParams& params, const SurvivalData& data) {
  return e_step_impl(params, data, design(data, params));
}

std::pair<CureModelParams, FitDiagnostics> fit_em(const SurvivalData& data, const FitConfig& cfg,
                                                  std::vector<std::string> feature_names) {
  cfg.validate();
  data.validate();
  const std::size_t n = data.size();
  const std::size_t p = data.n_features();
  if (std::none_of(data.event.begin(), data.event.end(), [](bool e) { return e; }))
    throw ValidationError("fit_em: at least one event is required");
  if (!feature_names.empty() && feature_names.size() != p)
    throw ValidationError("fit_em: feature_names length does not match features");

  CureModelParams params;
  params.n_features = p;
  params.feature_names = std::move(feature_names);
  params.incidence_columns = cfg.incidence_columns.empty() ? all_columns(p) : cfg.incidence_columns;
  params.latency_columns = cfg.latency_columns.empty() ? all_columns(p) : cfg.latency_columns;
  const Components c = design(data, params);

  // Start: incidence fitted to the event indicator, beta = 0, unweighted Breslow.
  Eigen::VectorXd delta(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) delta[static_cast<Eigen::Index>(i)] = data.event[i] ? 1.0 : 0.0;
  const double frac = std::clamp(delta.mean(), 0.05, 0.95);
  params.gamma = Eigen::VectorXd::Zero(c.inc.cols());
  params.gamma[0] = std::log(frac / (1.0 - frac));
  params.beta = Eigen::VectorXd::Zero(c.lat.cols());
  params.baseline = breslow_baseline(params.beta, data.time, data.event, c.lat,
                                     Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)));

  FitDiagnostics diag;
  double ll = observed_loglik_impl(params, data, c, cfg.ridge);
  diag.loglik_trace.push_back(ll);

  for (int iter = 1; iter <= cfg.max_em_iters; ++iter) {
    const Eigen::VectorXd w = e_step_impl(params, data, c);
    CureModelParams next = params;
    next.gamma = fit_incidence(c.inc, w, params.gamma, cfg.ridge, cfg);
    next.beta = fit_latency(data, c.lat, w, params.beta, cfg.ridge, cfg);
    next.baseline = breslow_baseline(next.beta, data.time, data.event, c.lat, w);
    const double next_ll = observed_loglik_impl(next, data, c, cfg.ridge);

    diag.iterations = iter;
    diag.loglik_trace.push_back(next_ll);
    const double rel = std::abs(next_ll - ll) / (std::abs(ll) + 1e-12);
    if (next_ll >= ll) params = std::move(next);
    ll = std::max(ll, next_ll);
    if (rel < cfg.em_tol) {
      diag.converged = true;
      break;
    }
  }
  if (!diag.converged)
    diag.warning = "EM did not converge within " + std::to_string(cfg.max_em_iters) + " iterations";
  diag.log_likelihood = ll;
  return {std::move(params), std::move(diag)};
}

RiskScore parse_risk_score(const std::string& name) {
  if (name == "incidence_times_hazard") return RiskScore::IncidenceTimesHazard;
  if (name == "hazard_only") return RiskScore::HazardOnly;
  if (name == "one_minus_survival") return RiskScore::OneMinusSurvivalAtHorizon;
  throw ValidationError("unknown risk score '" + name + "'");
}

std::string to_string(RiskScore r) {
  switch (r) {
    case RiskScore::IncidenceTimesHazard: return "incidence_times_hazard";
    case RiskScore::HazardOnly: return "hazard_only";
    case RiskScore::OneMinusSurvivalAtHorizon: return "one_minus_survival";
  }
  return "?";
}

double risk_score(const CureModelParams& params, std::span<const double> x, RiskScore kind, double horizon) {
  switch (kind) {
    case RiskScore::IncidenceTimesHazard:
      return predict_confidence(params, x) * hazard_multiplier(params.beta, select(x, params.latency_columns));
    case RiskScore::HazardOnly:
      return hazard_multiplier(params.beta, select(x, params.latency_columns));
    case RiskScore::OneMinusSurvivalAtHorizon:
      return 1.0 - mixture_survival(params, x, horizon);
  }
  return 0.0;
}

nlohmann::ordered_json to_json(const CureModelParams& params, const FitDiagnostics* diag) {
  nlohmann::ordered_json j;
  j["model"] = "cure";
  j["feature_names"] = params.feature_names;
  j["n_features"] = params.n_features;
  j["incidence_columns"] = params.incidence_columns;
  j["latency_columns"] = params.latency_columns;
  j["gamma"] = std::vector<double>(params.gamma.data(), params.gamma.data() + params.gamma.size());
  j["beta"] = std::vector<double>(params.beta.data(), params.beta.data() + params.beta.size());
  j["event_times"] = params.baseline.event_times;
  j["cum_hazard"] = params.baseline.cum_hazard;
  if (diag) {
    j["diagnostics"] = {{"iterations", diag->iterations},
                        {"converged", diag->converged},
                        {"log_likelihood", diag->log_likelihood},
                        {"warning", diag->warning}};
  }
  return j;
}

CureModelParams params_from_json(const nlohmann::ordered_json& j) {
  try {
    CureModelParams p;
    p.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    p.n_features = j.at("n_features").get<std::size_t>();
    p.incidence_columns = j.at("incidence_columns").get<std::vector<std::size_t>>();
    p.latency_columns = j.at("latency_columns").get<std::vector<std::size_t>>();
    const auto g = j.at("gamma").get<std::vector<double>>();
    const auto b = j.at("beta").get<std::vector<double>>();
    p.gamma = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
    p.beta = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    p.baseline.event_times = j.at("event_times").get<std::vector<double>>();
    p.baseline.cum_hazard = j.at("cum_hazard").get<std::vector<double>>();
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed cure model: ") + e.what());
  }
}

}  // namespace autoconfidence::cure
