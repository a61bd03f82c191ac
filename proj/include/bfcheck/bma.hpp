#pragma once

// Model-pair abstraction and the BMA supermodel built on top of it.
//
// A BmaProblem bundles two submodels, a prior over the model index, the
// Bayes factor computer being validated (the candidate) and the known-correct
// one. All Bayes factors are log BF_{1,0} in nats.

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bfcheck/probability.hpp"
#include "bfcheck/rng.hpp"

namespace bfcheck {

/// Value assigned to a test quantity whose parameter does not exist in the
/// submodel that produced the draw.
inline constexpr double kMissing = -std::numeric_limits<double>::infinity();

struct Dataset {
  std::vector<double> values;
  std::map<std::string, double> meta;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }

  double mean() const;
  /// Sample variance with denominator n - 1 (0 for a single value).
  double variance() const;
  /// First `n` observations.
  Dataset prefix(std::size_t n) const;
};

Dataset concat(const Dataset& a, const Dataset& b);

/// One parameter draw. Empty for parameter-free models and for the
/// missing-parameter sentinel.
using ParamDraw = std::vector<double>;

struct SubmodelSpec {
  using PriorSampler = std::function<ParamDraw(Rng&)>;
  using DataSampler =
      std::function<Dataset(const ParamDraw&, std::size_t, Rng&)>;
  using LogMarginal = std::function<double(const Dataset&)>;
  using PosteriorSampler =
      std::function<std::vector<ParamDraw>(const Dataset&, std::size_t, Rng&)>;

  int index = 0;
  PriorSampler prior_sampler;  // empty => parameter-free
  DataSampler data_sampler;
  LogMarginal log_marginal;    // optional
  PosteriorSampler posterior_sampler;  // empty => parameter-free

  bool parameter_free() const { return !posterior_sampler; }
};

/// Maps a dataset to log BF_{1,0}. The rng is the simulation's own stream;
/// deterministic computers ignore it.
struct BfComputer {
  std::string name;
  std::function<double(const Dataset&, Rng&)> fn;

  double operator()(const Dataset& y, Rng& rng) const { return fn(y, rng); }
};

struct TestQuantity {
  std::string name;
  /// (model index, parameter draw - empty when missing, dataset) -> value.
  std::function<double(int, std::span<const double>, const Dataset&)> eval;
};

using AcceptFn = std::function<double(const Dataset&)>;

class BmaProblem {
 public:
  BmaProblem(std::string id, SubmodelSpec model0, SubmodelSpec model1,
             double prior_m1, BfComputer true_bf, std::size_t n_obs,
             std::vector<TestQuantity> quantities);

  const std::string& id() const { return id_; }
  const SubmodelSpec& model(int i) const { return i == 0 ? model0_ : model1_; }
  Probability prior_m1() const { return prior_m1_; }
  /// Prior odds used to turn a Bayes factor into a posterior probability.
  /// Equals prior_m1() unless the problem was conditioned for posterior SBC.
  Probability conversion_prior() const { return conversion_prior_; }
  const BfComputer& true_bf() const { return true_bf_; }
  const BfComputer& candidate_bf() const { return candidate_bf_; }
  const std::vector<TestQuantity>& quantities() const { return quantities_; }
  std::size_t n_obs() const { return n_obs_; }
  /// Acceptance probability of a dataset; 1 when no rule is installed.
  double accept(const Dataset& y) const { return accept_ ? accept_(y) : 1.0; }
  bool has_accept_rule() const { return static_cast<bool>(accept_); }

  BmaProblem with_id(std::string id) const;
  BmaProblem with_candidate(BfComputer bf) const;
  BmaProblem with_accept(AcceptFn accept) const;
  BmaProblem with_prior(double prior_m1) const;
  BmaProblem with_conversion_prior(Probability prior) const;
  BmaProblem with_n_obs(std::size_t n) const;

 private:
  std::string id_;
  SubmodelSpec model0_;
  SubmodelSpec model1_;
  Probability prior_m1_;
  Probability conversion_prior_;
  BfComputer true_bf_;
  BfComputer candidate_bf_;
  AcceptFn accept_;
  std::size_t n_obs_;
  std::vector<TestQuantity> quantities_;
};

/// Pr(M1 | y) from log BF_{1,0} and the prior: logit(p) = log_bf10 + logit(prior).
Probability posterior_model_prob(double log_bf10, Probability prior_m1);
double posterior_model_prob(double log_bf10, double prior_m1);

struct PriorDraw {
  int index = 0;
  ParamDraw param;
  Dataset data;
  std::size_t attempts = 1;
};

inline constexpr std::size_t kMaxConsecutiveRejections = 10'000;

/// Draw (index, parameter, dataset) from the BMA prior predictive. Rejection
/// applies to the whole BMA draw: a rejected dataset sends us back to drawing
/// the model index.
PriorDraw prior_predictive_draw(const BmaProblem& problem, std::size_t size,
                                Rng& rng);

/// One draw from the BMA posterior: model index plus the slot of the
/// submodel posterior draw in its pool (npos when the submodel has no
/// parameters).
struct MixedDraw {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  int index = 0;
  std::size_t slot = npos;
};

/// Compose M BMA posterior draws: index ~ Bernoulli(p); draw k then takes
/// slot k of the matching pool. Pools shorter than M are resampled with
/// replacement. An empty pool means the submodel is parameter-free.
std::vector<MixedDraw> compose_bma_draws(double p,
                                         const std::vector<ParamDraw>& pool0,
                                         const std::vector<ParamDraw>& pool1,
                                         std::size_t M, Rng& rng);

}  // namespace bfcheck
