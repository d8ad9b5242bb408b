#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "autoconfidence/dataset.hpp"

namespace autoconfidence::cure {

// Breslow cumulative baseline hazard, a right-continuous step function with
// jumps at the distinct event times.
struct BaselineHazard {
  std::vector<double> event_times;  // strictly increasing
  std::vector<double> cum_hazard;   // nondecreasing, same length

  bool empty() const { return event_times.empty(); }
  double last_event_time() const { return event_times.empty() ? 0.0 : event_times.back(); }
  // H0(t); zero before the first event time.
  double cumulative(double t) const;
  // Size of the jump of H0 at exactly t, or 0 if t is not an event time.
  double jump_at(double t) const;
  void validate() const;
};

struct CureModelParams {
  Eigen::VectorXd gamma;  // incidence coefficients, intercept first
  Eigen::VectorXd beta;   // latency coefficients, no intercept
  BaselineHazard baseline;
  std::vector<std::string> feature_names;
  // Columns of the full feature vector entering each component.
  std::vector<std::size_t> incidence_columns;
  std::vector<std::size_t> latency_columns;
  std::size_t n_features = 0;

  void validate() const;
};

struct FitConfig {
  int max_em_iters = 200;
  double em_tol = 1e-7;  // relative change in observed-data log-likelihood
  int newton_max_iters = 50;
  double newton_tol = 1e-9;
  double ridge = 1e-6;  // L2 on gamma (intercept excluded) and beta
  // Empty means every feature column.
  std::vector<std::size_t> incidence_columns;
  std::vector<std::size_t> latency_columns;

  void validate() const;
};

struct FitDiagnostics {
  int iterations = 0;
  bool converged = false;
  double log_likelihood = 0.0;       // ridge-penalized observed-data log-likelihood
  std::vector<double> loglik_trace;  // one entry per parameter state, starting values first
  std::string warning;
};

// Column-major survival data: one row of x per observation.
struct SurvivalData {
  Eigen::VectorXd time;
  std::vector<bool> event;
  Eigen::MatrixXd x;

  std::size_t size() const { return event.size(); }
  std::size_t n_features() const { return static_cast<std::size_t>(x.cols()); }
  void validate() const;
};

SurvivalData to_data(const std::vector<SurvivalObservation>& obs);

// Logistic incidence pi(x) = P(susceptible | x), overflow-safe.
double incidence_prob(const Eigen::VectorXd& gamma, std::span<const double> x);
double hazard_multiplier(const Eigen::VectorXd& beta, std::span<const double> x);

// Latency survival S(t|x) = exp(-H0(t) exp(beta'x)); zero past the last event time.
double latency_survival(const CureModelParams& params, std::span<const double> x, double t);
// Mixture survival pi(x) S(t|x) + 1 - pi(x).
double mixture_survival(const CureModelParams& params, std::span<const double> x, double t);

struct CoxLikelihood {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

// Weighted Cox partial log-likelihood with Breslow ties. Weights scale each
// observation's contribution to its own event term and to every risk set it is in.
CoxLikelihood cox_partial_loglik(const Eigen::VectorXd& beta, const Eigen::VectorXd& time,
                                 const std::vector<bool>& event, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& weights);

BaselineHazard breslow_baseline(const Eigen::VectorXd& beta, const Eigen::VectorXd& time,
                                const std::vector<bool>& event, const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& weights);

// Observed-data log-likelihood of the mixture cure model at `params`, with the
// baseline hazard jumps taken as the hazard mass at each event time, minus the
// ridge penalty.
double observed_loglik(const CureModelParams& params, const SurvivalData& data, double ridge);

// Posterior probability of being susceptible for each observation.
Eigen::VectorXd e_step(const CureModelParams& params, const SurvivalData& data);

std::pair<CureModelParams, FitDiagnostics> fit_em(const SurvivalData& data, const FitConfig& cfg,
                                                  std::vector<std::string> feature_names = {});

// Confidence score: estimated probability of eventual publication.
double predict_confidence(const CureModelParams& params, std::span<const double> x);

std::vector<std::pair<double, double>> predict_survival_curve(const CureModelParams& params,
                                                              std::span<const double> x,
                                                              std::span<const double> grid);

enum class RiskScore { IncidenceTimesHazard, HazardOnly, OneMinusSurvivalAtHorizon };

RiskScore parse_risk_score(const std::string& name);
std::string to_string(RiskScore r);

// Ordering score for concordance; higher means earlier expected publication.
double risk_score(const CureModelParams& params, std::span<const double> x, RiskScore kind,
                  double horizon = 365.0);

nlohmann::ordered_json to_json(const CureModelParams& params, const FitDiagnostics* diag = nullptr);
CureModelParams params_from_json(const nlohmann::ordered_json& j);

}  // namespace autoconfidence::cure
