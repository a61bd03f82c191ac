#include "bfcheck/bma.hpp"

#include <cmath>
#include <numeric>

#include "bfcheck/error.hpp"

namespace bfcheck {

double Dataset::mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double Dataset::variance() const {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(n - 1);
}

Dataset Dataset::prefix(std::size_t n) const {
  Dataset out;
  out.meta = meta;
  out.values.assign(values.begin(),
                    values.begin() + static_cast<std::ptrdiff_t>(
                                         std::min(n, values.size())));
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  Dataset out = a;
  out.values.insert(out.values.end(), b.values.begin(), b.values.end());
  for (const auto& [k, v] : b.meta) out.meta.emplace(k, v);
  return out;
}

BmaProblem::BmaProblem(std::string id, SubmodelSpec model0,
                       SubmodelSpec model1, double prior_m1,
                       BfComputer true_bf, std::size_t n_obs,
                       std::vector<TestQuantity> quantities)
    : id_(std::move(id)),
      model0_(std::move(model0)),
      model1_(std::move(model1)),
      true_bf_(std::move(true_bf)),
      n_obs_(n_obs),
      quantities_(std::move(quantities)) {
  if (!(prior_m1 > 0.0 && prior_m1 < 1.0))
    throw Error("prior_m1 must lie strictly between 0 and 1");
  if (!model0_.data_sampler || !model1_.data_sampler)
    throw Error("both submodels need a data sampler");
  if (n_obs_ == 0) throw Error("dataset size must be at least 1");
  model0_.index = 0;
  model1_.index = 1;
  prior_m1_ = Probability::from_value(prior_m1);
  conversion_prior_ = prior_m1_;
  candidate_bf_ = true_bf_;
}

BmaProblem BmaProblem::with_id(std::string id) const {
  BmaProblem p = *this;
  p.id_ = std::move(id);
  return p;
}

BmaProblem BmaProblem::with_candidate(BfComputer bf) const {
  BmaProblem p = *this;
  p.candidate_bf_ = std::move(bf);
  return p;
}

BmaProblem BmaProblem::with_accept(AcceptFn accept) const {
  BmaProblem p = *this;
  p.accept_ = std::move(accept);
  return p;
}

BmaProblem BmaProblem::with_prior(double prior_m1) const {
  if (!(prior_m1 > 0.0 && prior_m1 < 1.0))
    throw Error("prior_m1 must lie strictly between 0 and 1");
  BmaProblem p = *this;
  p.prior_m1_ = Probability::from_value(prior_m1);
  p.conversion_prior_ = p.prior_m1_;
  return p;
}

BmaProblem BmaProblem::with_conversion_prior(Probability prior) const {
  BmaProblem p = *this;
  p.conversion_prior_ = prior;
  return p;
}

BmaProblem BmaProblem::with_n_obs(std::size_t n) const {
  if (n == 0) throw Error("dataset size must be at least 1");
  BmaProblem p = *this;
  p.n_obs_ = n;
  return p;
}

Probability posterior_model_prob(double log_bf10, Probability prior_m1) {
  if (!std::isfinite(log_bf10)) throw Error("invalid Bayes factor");
  return Probability::from_log_odds(log_bf10 + prior_m1.log_odds());
}

double posterior_model_prob(double log_bf10, double prior_m1) {
  if (!(prior_m1 > 0.0 && prior_m1 < 1.0))
    throw Error("prior_m1 must lie strictly between 0 and 1");
  return posterior_model_prob(log_bf10, Probability::from_value(prior_m1))
      .value();
}

PriorDraw prior_predictive_draw(const BmaProblem& problem, std::size_t size,
                                Rng& rng) {
  if (size == 0) throw Error("dataset size must be at least 1");
  const double p1 = problem.prior_m1().value();
  for (std::size_t attempt = 1; attempt <= kMaxConsecutiveRejections;
       ++attempt) {
    PriorDraw d;
    d.index = bernoulli(rng, p1) ? 1 : 0;
    const SubmodelSpec& m = problem.model(d.index);
    if (m.prior_sampler) d.param = m.prior_sampler(rng);
    d.data = m.data_sampler(d.param, size, rng);
    d.attempts = attempt;
    if (!problem.has_accept_rule()) return d;
    const double a = problem.accept(d.data);
    if (a >= 1.0 || uniform01(rng) < a) return d;
  }
  throw Error("accept region too small");
}

std::vector<MixedDraw> compose_bma_draws(double p,
                                         const std::vector<ParamDraw>& pool0,
                                         const std::vector<ParamDraw>& pool1,
                                         std::size_t M, Rng& rng) {
  if (M == 0) throw Error("need at least one posterior draw");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("probability out of range");
  std::vector<MixedDraw> out(M);
  for (std::size_t k = 0; k < M; ++k) {
    MixedDraw& d = out[k];
    d.index = bernoulli(rng, p) ? 1 : 0;
    const auto& pool = d.index == 0 ? pool0 : pool1;
    if (pool.empty()) continue;
    // Pairing draw k with pool slot k keeps the draws iid. Resampling a
    // short pool reuses values and skews ranks, so it is only a fallback.
    if (pool.size() >= M)
      d.slot = k;
    else
      d.slot = static_cast<std::size_t>(
          uniform_int(rng, 0, static_cast<std::int64_t>(pool.size()) - 1));
  }
  return out;
}

}  // namespace bfcheck
