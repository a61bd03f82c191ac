#pragma once

// Simulation-based calibration for the BMA supermodel.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bfcheck/bma.hpp"
#include "bfcheck/zoo.hpp"

namespace bfcheck {

struct EngineConfig {
  std::size_t n_sims = 1000;
  std::size_t n_draws = 999;  // posterior draws per simulation (M)
  std::uint64_t master_seed = 0;
  /// Quantities to rank; empty selects every quantity of the problem.
  std::vector<std::string> quantities;
  unsigned jobs = 1;
};

struct DatasetSummary {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t length = 0;
};

struct SimulationRecord {
  std::size_t sim_id = 0;
  int true_index = 0;
  double p_m1 = 0.0;
  /// One rank per RecordSet::quantity_names entry, each in [0, M].
  std::vector<int> ranks;
  std::size_t accept_attempts = 1;
  DatasetSummary summary;
  /// The candidate returned a non-finite Bayes factor; p_m1 and ranks are
  /// meaningless.
  bool failed = false;
};

struct RecordSet {
  std::string problem_id;
  EngineConfig config;
  /// Pr(M1) used to simulate the model indices.
  double prior_m1 = 0.5;
  std::vector<std::string> quantity_names;
  std::vector<SimulationRecord> records;

  std::size_t failures() const;
  /// Position of `name` in quantity_names; throws when absent.
  std::size_t quantity_index(const std::string& name) const;

  // Columns over successful records, in record order.
  std::vector<int> ranks(const std::string& quantity) const;
  std::vector<double> probs() const;
  std::vector<int> true_indices() const;

  /// Records at the given positions, in the given order.
  RecordSet select(std::span<const std::size_t> positions) const;
  /// The first n records.
  RecordSet head(std::size_t n) const;
};

/// l + U with l = #{d < x}, e = #{d == x}, U uniform on {0, ..., e}.
int rank_from_draws(double x, std::span<const double> draws, Rng& rng);
int rank_from_counts(std::size_t less, std::size_t equal, Rng& rng);

SimulationRecord run_single_simulation(const BmaProblem& problem,
                                       const EngineConfig& config,
                                       std::size_t sim_id, Rng& rng);

/// Simulations 1..n_sims, each on derive_stream(master_seed, sim_id). The
/// result does not depend on config.jobs.
RecordSet run_sbc(const BmaProblem& problem, const EngineConfig& config);

/// Largest tolerated share of failed simulations in run_sbc.
inline constexpr double kMaxFailureFraction = 0.01;

// ---------------------------------------------------------------------------
// Posterior SBC
// ---------------------------------------------------------------------------

/// Pr(M1) making the posterior model probability at y1 exactly 1/2.
Probability posterior_sbc_prior(double log_marg0_y1, double log_marg1_y1);

enum class PosteriorSbcPrior {
  /// Parameters drawn from the posterior given y1, as the candidate assumes.
  conditioned,
  /// Parameters drawn from the original prior while the candidate still
  /// conditions on y1. Simulator and model disagree.
  unconditioned,
};

/// Nested-normal pair conditioned on y1. Simulated datasets are (y1, y2)
/// with len(y2) = spec.n_obs; the candidate sees the concatenation.
BmaProblem posterior_sbc_problem(
    const zoo::NestedNormal& spec, const Dataset& y1,
    PosteriorSbcPrior prior = PosteriorSbcPrior::conditioned);

RecordSet run_posterior_sbc(
    const zoo::NestedNormal& spec, const Dataset& y1,
    const EngineConfig& config,
    PosteriorSbcPrior prior = PosteriorSbcPrior::conditioned);

}  // namespace bfcheck
