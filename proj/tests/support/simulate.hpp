#pragma once

// Test-only data generators with known parameters.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "autoconfidence/cure_model.hpp"

namespace autoconfidence::testing {

struct CureSimulation {
  cure::SurvivalData data;
  double true_susceptible_fraction = 0.0;  // mean of pi(x) over the sample
  double censored_susceptible_fraction = 0.0;
};

// Mixture cure data: x ~ N(0, I), susceptibility ~ Bernoulli(logistic(gamma'[1,x])),
// latency ~ Exponential(rate * exp(beta'x)), follow-up ~ Uniform(followup_min, followup_max)
// days (administrative censoring under staggered entry). Times are rounded up to whole days.
inline CureSimulation simulate_cure(std::size_t n, const Eigen::VectorXd& gamma, const Eigen::VectorXd& beta,
                                    double rate, double followup_min, double followup_max, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  const auto p = beta.size();
  CureSimulation sim;
  sim.data.time.resize(static_cast<Eigen::Index>(n));
  sim.data.x.resize(static_cast<Eigen::Index>(n), p);
  sim.data.event.resize(n);
  double pi_sum = 0.0;
  std::size_t susceptible = 0, censored_susceptible = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < p; ++j) sim.data.x(r, j) = normal(rng);
    const double z = gamma[0] + sim.data.x.row(r).dot(gamma.tail(p));
    const double pi = 1.0 / (1.0 + std::exp(-z));
    pi_sum += pi;
    const bool is_susceptible = unif(rng) < pi;
    const double latency = std::exponential_distribution<double>(rate * std::exp(sim.data.x.row(r).dot(beta)))(rng);
    const double followup = followup_min + (followup_max - followup_min) * unif(rng);
    if (is_susceptible) ++susceptible;
    if (is_susceptible && latency <= followup) {
      sim.data.time[r] = std::max(1.0, std::ceil(latency));
      sim.data.event[i] = true;
    } else {
      if (is_susceptible) ++censored_susceptible;
      sim.data.time[r] = std::ceil(followup);
      sim.data.event[i] = false;
    }
  }
  sim.true_susceptible_fraction = pi_sum / static_cast<double>(n);
  sim.censored_susceptible_fraction =
      susceptible ? static_cast<double>(censored_susceptible) / static_cast<double>(susceptible) : 0.0;
  return sim;
}

}  // namespace autoconfidence::testing
