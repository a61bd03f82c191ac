#include "bfcheck/engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "bfcheck/error.hpp"

namespace bfcheck {

std::size_t RecordSet::failures() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(),
                    [](const SimulationRecord& r) { return r.failed; }));
}

std::size_t RecordSet::quantity_index(const std::string& name) const {
  const auto it = std::find(quantity_names.begin(), quantity_names.end(), name);
  if (it == quantity_names.end())
    throw Error("record set has no quantity '" + name + "'");
  return static_cast<std::size_t>(it - quantity_names.begin());
}

std::vector<int> RecordSet::ranks(const std::string& quantity) const {
  const std::size_t q = quantity_index(quantity);
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records)
    if (!r.failed) out.push_back(r.ranks.at(q));
  return out;
}

std::vector<double> RecordSet::probs() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records)
    if (!r.failed) out.push_back(r.p_m1);
  return out;
}

std::vector<int> RecordSet::true_indices() const {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records)
    if (!r.failed) out.push_back(r.true_index);
  return out;
}

RecordSet RecordSet::select(std::span<const std::size_t> positions) const {
  RecordSet out;
  out.problem_id = problem_id;
  out.config = config;
  out.prior_m1 = prior_m1;
  out.quantity_names = quantity_names;
  out.records.reserve(positions.size());
  for (std::size_t p : positions) out.records.push_back(records.at(p));
  return out;
}

RecordSet RecordSet::head(std::size_t n) const {
  RecordSet out;
  out.problem_id = problem_id;
  out.config = config;
  out.prior_m1 = prior_m1;
  out.quantity_names = quantity_names;
  out.records.assign(records.begin(),
                     records.begin() + static_cast<std::ptrdiff_t>(
                                           std::min(n, records.size())));
  return out;
}

// ---------------------------------------------------------------------------

int rank_from_counts(std::size_t less, std::size_t equal, Rng& rng) {
  if (equal == 0) return static_cast<int>(less);
  return static_cast<int>(
      less + static_cast<std::size_t>(
                 uniform_int(rng, 0, static_cast<std::int64_t>(equal))));
}

int rank_from_draws(double x, std::span<const double> draws, Rng& rng) {
  if (draws.empty()) throw Error("need at least one posterior draw");
  std::size_t less = 0, equal = 0;
  for (double d : draws) {
    if (d < x)
      ++less;
    else if (d == x)
      ++equal;
  }
  return rank_from_counts(less, equal, rng);
}

namespace {

std::vector<const TestQuantity*> selected_quantities(
    const BmaProblem& problem, const EngineConfig& config) {
  std::vector<const TestQuantity*> out;
  const auto& all = problem.quantities();
  if (config.quantities.empty()) {
    for (const auto& q : all) out.push_back(&q);
    return out;
  }
  for (const auto& name : config.quantities) {
    const auto it = std::find_if(all.begin(), all.end(),
                                 [&](const auto& q) { return q.name == name; });
    if (it == all.end()) {
      std::string msg = "unknown quantity '" + name + "' for " + problem.id() +
                        "; valid quantities:";
      for (const auto& q : all) msg += " " + q.name;
      throw Error(msg);
    }
    out.push_back(&*it);
  }
  return out;
}

std::vector<std::string> quantity_names(const BmaProblem& problem,
                                        const EngineConfig& config) {
  std::vector<std::string> names;
  for (const auto* q : selected_quantities(problem, config))
    names.push_back(q->name);
  return names;
}

void count_against(double x, double v, std::size_t n, std::size_t& less,
                   std::size_t& equal) {
  if (v < x)
    less += n;
  else if (v == x)
    equal += n;
}

}  // namespace

SimulationRecord run_single_simulation(const BmaProblem& problem,
                                       const EngineConfig& config,
                                       std::size_t sim_id, Rng& rng) {
  const std::size_t M = config.n_draws;
  if (M == 0) throw Error("need at least one posterior draw");
  const auto quantities = selected_quantities(problem, config);

  SimulationRecord rec;
  rec.sim_id = sim_id;
  PriorDraw draw = prior_predictive_draw(problem, problem.n_obs(), rng);
  rec.true_index = draw.index;
  rec.accept_attempts = draw.attempts;
  rec.summary = {draw.data.mean(), draw.data.variance(), draw.data.size()};

  const double log_bf = problem.candidate_bf()(draw.data, rng);
  if (!std::isfinite(log_bf)) {
    rec.failed = true;
    rec.p_m1 = std::nan("");
    rec.ranks.assign(quantities.size(), -1);
    return rec;
  }
  const Probability post = posterior_model_prob(log_bf, problem.conversion_prior());
  rec.p_m1 = post.value();
  const int i = draw.index;
  const Dataset& y = draw.data;
  rec.ranks.reserve(quantities.size());

  const bool parameter_free =
      problem.model(0).parameter_free() && problem.model(1).parameter_free();
  if (parameter_free) {
    // Every draw of submodel k yields the same test quantity value, so only
    // the number of index-1 draws matters.
    const auto ones = static_cast<std::size_t>(
        std::binomial_distribution<long>(static_cast<long>(M), rec.p_m1)(rng));
    const std::size_t counts[2] = {M - ones, ones};
    for (const auto* q : quantities) {
      std::size_t less = 0, equal = 0;
      if (q->name == "model_index") {
        count_against(i, 0.0, counts[0], less, equal);
        count_against(i, 1.0, counts[1], less, equal);
      } else {
        const double x = q->eval(i, draw.param, y);
        count_against(x, q->eval(0, {}, y), counts[0], less, equal);
        count_against(x, q->eval(1, {}, y), counts[1], less, equal);
      }
      rec.ranks.push_back(rank_from_counts(less, equal, rng));
    }
    return rec;
  }

  std::vector<ParamDraw> pools[2];
  for (int k = 0; k < 2; ++k) {
    const auto& m = problem.model(k);
    if (!m.parameter_free()) pools[k] = m.posterior_sampler(y, M, rng);
  }
  const auto mixed = compose_bma_draws(rec.p_m1, pools[0], pools[1], M, rng);
  std::vector<double> values(M);
  for (const auto* q : quantities) {
    if (q->name == "model_index") {
      for (std::size_t k = 0; k < M; ++k) values[k] = mixed[k].index;
      rec.ranks.push_back(rank_from_draws(i, values, rng));
      continue;
    }
    double missing_value[2];
    bool have_missing[2] = {false, false};
    for (std::size_t k = 0; k < M; ++k) {
      const MixedDraw& d = mixed[k];
      if (d.slot == MixedDraw::npos) {
        if (!have_missing[d.index]) {
          missing_value[d.index] = q->eval(d.index, {}, y);
          have_missing[d.index] = true;
        }
        values[k] = missing_value[d.index];
      } else {
        values[k] = q->eval(d.index, pools[d.index][d.slot], y);
      }
    }
    const double x = q->eval(i, draw.param, y);
    rec.ranks.push_back(rank_from_draws(x, values, rng));
  }
  return rec;
}

RecordSet run_sbc(const BmaProblem& problem, const EngineConfig& config) {
  if (config.n_sims == 0) throw Error("need at least one simulation");
  if (config.n_draws == 0) throw Error("need at least one posterior draw");
  RecordSet out;
  out.problem_id = problem.id();
  out.config = config;
  out.prior_m1 = problem.prior_m1().value();
  out.quantity_names = quantity_names(problem, config);
  out.records.resize(config.n_sims);

  const unsigned jobs = std::max(1u, std::min<unsigned>(
      config.jobs, static_cast<unsigned>(config.n_sims)));
  std::vector<std::exception_ptr> errors(jobs);
  auto worker = [&](unsigned t) {
    try {
      for (std::size_t s = t; s < config.n_sims; s += jobs) {
        const std::size_t sim_id = s + 1;
        Rng rng = derive_stream(config.master_seed, sim_id);
        out.records[s] = run_single_simulation(problem, config, sim_id, rng);
      }
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(worker, t);
    for (auto& th : threads) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::size_t failed = out.failures();
  if (static_cast<double>(failed) >
      kMaxFailureFraction * static_cast<double>(config.n_sims))
    throw Error(std::to_string(failed) + " of " +
                std::to_string(config.n_sims) +
                " simulations returned a non-finite Bayes factor");
  return out;
}

// ---------------------------------------------------------------------------

Probability posterior_sbc_prior(double log_marg0_y1, double log_marg1_y1) {
  if (!std::isfinite(log_marg0_y1) || !std::isfinite(log_marg1_y1))
    throw Error("log marginal likelihoods must be finite");
  return Probability::from_log_odds(log_marg0_y1 - log_marg1_y1);
}

BmaProblem posterior_sbc_problem(const zoo::NestedNormal& spec,
                                 const Dataset& y1, PosteriorSbcPrior prior) {
  if (y1.empty()) throw Error("posterior SBC needs a non-empty y1");
  if (spec.n_obs == 0) throw Error("posterior SBC needs y2 of length >= 1");
  const BmaProblem base = zoo::nested_normal_problem(spec);
  const auto lm = zoo::nested_normal_log_marginals(y1, spec);
  const Probability adjusted = posterior_sbc_prior(lm.log_m0, lm.log_m1);
  // Implied Pr(M1 | y1) under the adjusted prior; 1/2 by construction.
  const double implied =
      posterior_model_prob(lm.log_m1 - lm.log_m0, adjusted).value();
  const auto cond = zoo::nested_normal_posterior(y1, spec, 0.0, spec.prior_sd_mu);

  SubmodelSpec m0 = base.model(0);
  SubmodelSpec m1 = base.model(1);
  auto append_to_y1 = [y1](SubmodelSpec::DataSampler inner) {
    return [y1, inner](const ParamDraw& theta, std::size_t n, Rng& rng) {
      return concat(y1, inner(theta, n, rng));
    };
  };
  m0.data_sampler = append_to_y1(m0.data_sampler);
  m1.data_sampler = append_to_y1(m1.data_sampler);
  if (prior == PosteriorSbcPrior::conditioned) {
    m1.prior_sampler = [cond](Rng& rng) {
      return ParamDraw{cond.mean + cond.sd * std_normal(rng)};
    };
  }
  const std::string id = prior == PosteriorSbcPrior::conditioned
                             ? "nested-normal-post"
                             : "nested-normal-post-mismatch";
  return BmaProblem(id, std::move(m0), std::move(m1), implied, base.true_bf(),
                    spec.n_obs, base.quantities())
      .with_conversion_prior(adjusted);
}

RecordSet run_posterior_sbc(const zoo::NestedNormal& spec, const Dataset& y1,
                            const EngineConfig& config,
                            PosteriorSbcPrior prior) {
  return run_sbc(posterior_sbc_problem(spec, y1, prior), config);
}

}  // namespace bfcheck
