#pragma once

// Model pairs whose Bayes factors are known in closed form.

#include <string>
#include <utility>
#include <vector>

#include "bfcheck/bma.hpp"

namespace bfcheck::zoo {

// ---------------------------------------------------------------------------
// Single binary observation, no parameters.
// ---------------------------------------------------------------------------
struct BinaryToy {
  double p0 = 0.2;  // Pr(y = 1 | M0)
  double p1 = 0.8;  // Pr(y = 1 | M1)
};

double binary_toy_true_log_bf(int y, const BinaryToy& toy = {});
BmaProblem binary_toy_problem(const BinaryToy& toy = {}, double prior_m1 = 0.5);
/// Candidate that reports posterior Pr(M1|y=0) = b0 and Pr(M1|y=1) = b1
/// under prior `prior_m1`.
BfComputer binary_toy_candidate(double b0, double b1, double prior_m1 = 0.5);

// ---------------------------------------------------------------------------
// Poisson(lambda) vs NB2(mu, phi), parameter-free, n_obs iid counts.
// ---------------------------------------------------------------------------
struct PoissonNbToy {
  double lambda = 3.0;
  double mu = 3.0;
  double phi = 5.0;
  std::size_t n_obs = 25;
};

double poisson_log_pmf(double y, double lambda);
/// Negative binomial in mean-dispersion form, variance mu + mu^2 / phi.
double nb2_log_pmf(double y, double mu, double phi);
double poisson_nb_true_log_bf(const Dataset& y, const PoissonNbToy& toy = {});
BmaProblem poisson_nb_problem(const PoissonNbToy& toy = {},
                              double prior_m1 = 0.5);

// ---------------------------------------------------------------------------
// Single real observation; M1 is always N(0, 1).
// ---------------------------------------------------------------------------
struct GoodPair {
  enum class Variant { cauchy, normal_mu };
  Variant variant = Variant::cauchy;
  double mu = 2.0;  // normal_mu only
};

double good_pair_true_log_bf(double y, const GoodPair& pair);
BmaProblem good_pair_problem(const GoodPair& pair, double prior_m1 = 0.5);

// ---------------------------------------------------------------------------
// M0: y_i ~ N(0, sigma); M1: mu ~ N(0, prior_sd_mu), y_i ~ N(mu, sigma).
// ---------------------------------------------------------------------------
struct NestedNormal {
  double sigma_obs = 1.0;
  double prior_sd_mu = 1.0;
  std::size_t n_obs = 5;
};

struct LogMarginals {
  double log_m0 = 0.0;
  double log_m1 = 0.0;
};

LogMarginals nested_normal_log_marginals(const Dataset& y,
                                         const NestedNormal& spec);

/// Normal posterior of mu under M1 given y, with prior N(prior_mean, prior_sd).
struct NormalPosterior {
  double mean = 0.0;
  double sd = 1.0;
};
NormalPosterior nested_normal_posterior(const Dataset& y,
                                        const NestedNormal& spec,
                                        double prior_mean, double prior_sd);

BmaProblem nested_normal_problem(const NestedNormal& spec = {},
                                 double prior_m1 = 0.5);

// ---------------------------------------------------------------------------

/// Test quantities shipped for each zoo member. Always starts with
/// model_index and log_lik.
std::vector<TestQuantity> builtin_quantities(const std::string& model);

/// Model identifiers understood by make_problem.
std::vector<std::string> model_names();

/// Build a zoo problem by name: binary-toy | poisson-nb | good-cauchy |
/// good-normal[:MU] | nested-normal.
BmaProblem make_problem(const std::string& model);

}  // namespace bfcheck::zoo
