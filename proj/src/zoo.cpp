#include "bfcheck/zoo.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "bfcheck/error.hpp"

namespace bfcheck::zoo {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))

double normal_log_pdf(double y, double mean, double sd) {
  const double z = (y - mean) / sd;
  return -kLogSqrt2Pi - std::log(sd) - 0.5 * z * z;
}

double cauchy_log_pdf(double y) {
  return -std::log(std::numbers::pi) - std::log1p(y * y);
}

TestQuantity model_index_quantity() {
  return {"model_index", [](int i, std::span<const double>, const Dataset&) {
            return static_cast<double>(i);
          }};
}

Dataset iid_counts(std::size_t n, Rng& rng, const auto& draw_one) {
  Dataset d;
  d.values.reserve(n);
  for (std::size_t k = 0; k < n; ++k) d.values.push_back(draw_one(rng));
  return d;
}

double poisson_log_lik(const Dataset& y, double lambda) {
  double s = 0.0;
  for (double v : y.values) s += poisson_log_pmf(v, lambda);
  return s;
}

double nb2_log_lik(const Dataset& y, double mu, double phi) {
  double s = 0.0;
  for (double v : y.values) s += nb2_log_pmf(v, mu, phi);
  return s;
}

void require_counts(const Dataset& y) {
  for (double v : y.values)
    if (v < 0.0 || v != std::floor(v))
      throw Error("count data must be non-negative integers");
}

}  // namespace

// ---------------------------------------------------------------------------

double binary_toy_true_log_bf(int y, const BinaryToy& toy) {
  if (y != 0 && y != 1) throw Error("binary toy observation must be 0 or 1");
  return y == 1 ? std::log(toy.p1) - std::log(toy.p0)
                : std::log1p(-toy.p1) - std::log1p(-toy.p0);
}

BfComputer binary_toy_candidate(double b0, double b1, double prior_m1) {
  const double prior_lo = logit(prior_m1);
  const double l0 = logit(b0) - prior_lo;
  const double l1 = logit(b1) - prior_lo;
  std::ostringstream name;
  name << "binary-toy-candidate(" << b0 << "," << b1 << ")";
  return {name.str(), [l0, l1](const Dataset& y, Rng&) {
            return y.values.at(0) > 0.5 ? l1 : l0;
          }};
}

BmaProblem binary_toy_problem(const BinaryToy& toy, double prior_m1) {
  auto sampler = [](double p) {
    return [p](const ParamDraw&, std::size_t n, Rng& rng) {
      Dataset d;
      for (std::size_t k = 0; k < n; ++k)
        d.values.push_back(bernoulli(rng, p) ? 1.0 : 0.0);
      return d;
    };
  };
  auto log_marg = [](double p) {
    return [p](const Dataset& y) {
      double s = 0.0;
      for (double v : y.values) s += v > 0.5 ? std::log(p) : std::log1p(-p);
      return s;
    };
  };
  SubmodelSpec m0{0, {}, sampler(toy.p0), log_marg(toy.p0), {}};
  SubmodelSpec m1{1, {}, sampler(toy.p1), log_marg(toy.p1), {}};
  BfComputer truth{"binary-toy-true", [toy](const Dataset& y, Rng&) {
                     return binary_toy_true_log_bf(y.values.at(0) > 0.5 ? 1 : 0,
                                                   toy);
                   }};
  std::vector<TestQuantity> q{
      model_index_quantity(),
      {"log_lik", [toy](int i, std::span<const double>, const Dataset& y) {
         const double p = i == 0 ? toy.p0 : toy.p1;
         return y.values.at(0) > 0.5 ? std::log(p) : std::log1p(-p);
       }}};
  return BmaProblem("binary-toy", std::move(m0), std::move(m1), prior_m1,
                    std::move(truth), 1, std::move(q));
}

// ---------------------------------------------------------------------------

double poisson_log_pmf(double y, double lambda) {
  if (!(lambda > 0.0)) throw Error("Poisson rate must be positive");
  if (y < 0.0) throw Error("count data must be non-negative integers");
  return y * std::log(lambda) - lambda - std::lgamma(y + 1.0);
}

double nb2_log_pmf(double y, double mu, double phi) {
  if (!(mu > 0.0) || !(phi > 0.0))
    throw Error("NB2 mean and dispersion must be positive");
  if (y < 0.0) throw Error("count data must be non-negative integers");
  return std::lgamma(y + phi) - std::lgamma(phi) - std::lgamma(y + 1.0) +
         phi * (std::log(phi) - std::log(phi + mu)) +
         y * (std::log(mu) - std::log(phi + mu));
}

double poisson_nb_true_log_bf(const Dataset& y, const PoissonNbToy& toy) {
  if (y.empty()) throw Error("dataset must be non-empty");
  require_counts(y);
  return nb2_log_lik(y, toy.mu, toy.phi) - poisson_log_lik(y, toy.lambda);
}

BmaProblem poisson_nb_problem(const PoissonNbToy& toy, double prior_m1) {
  SubmodelSpec m0{
      0,
      {},
      [lambda = toy.lambda](const ParamDraw&, std::size_t n, Rng& rng) {
        std::poisson_distribution<long> pois(lambda);
        return iid_counts(n, rng,
                          [&](Rng& r) { return static_cast<double>(pois(r)); });
      },
      [lambda = toy.lambda](const Dataset& y) {
        return poisson_log_lik(y, lambda);
      },
      {}};
  SubmodelSpec m1{
      1,
      {},
      [mu = toy.mu, phi = toy.phi](const ParamDraw&, std::size_t n, Rng& rng) {
        // Gamma-Poisson mixture: rate ~ Gamma(phi, mu / phi).
        std::gamma_distribution<double> gam(phi, mu / phi);
        return iid_counts(n, rng, [&](Rng& r) {
          return static_cast<double>(std::poisson_distribution<long>(gam(r))(r));
        });
      },
      [mu = toy.mu, phi = toy.phi](const Dataset& y) {
        return nb2_log_lik(y, mu, phi);
      },
      {}};
  BfComputer truth{"poisson-nb-true", [toy](const Dataset& y, Rng&) {
                     return poisson_nb_true_log_bf(y, toy);
                   }};
  std::vector<TestQuantity> q{
      model_index_quantity(),
      {"log_lik",
       [toy](int i, std::span<const double>, const Dataset& y) {
         return i == 0 ? poisson_log_lik(y, toy.lambda)
                       : nb2_log_lik(y, toy.mu, toy.phi);
       }},
      {"var_y", [](int i, std::span<const double>, const Dataset& y) {
         return i == 0 ? y.mean() : y.variance();
       }}};
  return BmaProblem("poisson-nb", std::move(m0), std::move(m1), prior_m1,
                    std::move(truth), toy.n_obs, std::move(q));
}

// ---------------------------------------------------------------------------

namespace {

double good_m0_log_pdf(double y, const GoodPair& pair) {
  return pair.variant == GoodPair::Variant::cauchy
             ? cauchy_log_pdf(y)
             : normal_log_pdf(y, pair.mu, 1.0);
}

}  // namespace

double good_pair_true_log_bf(double y, const GoodPair& pair) {
  return normal_log_pdf(y, 0.0, 1.0) - good_m0_log_pdf(y, pair);
}

BmaProblem good_pair_problem(const GoodPair& pair, double prior_m1) {
  auto sum_log = [](auto&& dens) {
    return [dens](const Dataset& y) {
      double s = 0.0;
      for (double v : y.values) s += dens(v);
      return s;
    };
  };
  auto m0_dens = [pair](double v) { return good_m0_log_pdf(v, pair); };
  auto m1_dens = [](double v) { return normal_log_pdf(v, 0.0, 1.0); };
  SubmodelSpec m0{
      0,
      {},
      [pair](const ParamDraw&, std::size_t n, Rng& rng) {
        Dataset d;
        for (std::size_t k = 0; k < n; ++k) {
          d.values.push_back(
              pair.variant == GoodPair::Variant::cauchy
                  ? std::cauchy_distribution<double>(0.0, 1.0)(rng)
                  : pair.mu + std_normal(rng));
        }
        return d;
      },
      sum_log(m0_dens),
      {}};
  SubmodelSpec m1{1,
                  {},
                  [](const ParamDraw&, std::size_t n, Rng& rng) {
                    Dataset d;
                    for (std::size_t k = 0; k < n; ++k)
                      d.values.push_back(std_normal(rng));
                    return d;
                  },
                  sum_log(m1_dens),
                  {}};
  BfComputer truth{"good-true", [pair](const Dataset& y, Rng&) {
                     double s = 0.0;
                     for (double v : y.values)
                       s += good_pair_true_log_bf(v, pair);
                     return s;
                   }};
  std::vector<TestQuantity> q{
      model_index_quantity(),
      {"log_lik", [pair](int i, std::span<const double>, const Dataset& y) {
         double s = 0.0;
         for (double v : y.values)
           s += i == 0 ? good_m0_log_pdf(v, pair) : normal_log_pdf(v, 0, 1);
         return s;
       }}};
  const std::string id =
      pair.variant == GoodPair::Variant::cauchy ? "good-cauchy" : "good-normal";
  return BmaProblem(id, std::move(m0), std::move(m1), prior_m1,
                    std::move(truth), 1, std::move(q));
}

// ---------------------------------------------------------------------------

LogMarginals nested_normal_log_marginals(const Dataset& y,
                                         const NestedNormal& spec) {
  if (y.empty()) throw Error("dataset must be non-empty");
  const double n = static_cast<double>(y.size());
  const double s2 = spec.sigma_obs * spec.sigma_obs;
  const double t2 = spec.prior_sd_mu * spec.prior_sd_mu;
  double sum = 0.0, sum_sq = 0.0;
  for (double v : y.values) {
    sum += v;
    sum_sq += v * v;
  }
  LogMarginals out;
  out.log_m0 = -n * kLogSqrt2Pi - n * std::log(spec.sigma_obs) -
               0.5 * sum_sq / s2;
  // Covariance s2 I + t2 J: det = s2^n (1 + n t2 / s2), inverse by
  // Sherman-Morrison.
  const double log_det = n * std::log(s2) + std::log1p(n * t2 / s2);
  const double quad = (sum_sq - t2 * sum * sum / (s2 + n * t2)) / s2;
  out.log_m1 = -n * kLogSqrt2Pi - 0.5 * log_det - 0.5 * quad;
  return out;
}

NormalPosterior nested_normal_posterior(const Dataset& y,
                                        const NestedNormal& spec,
                                        double prior_mean, double prior_sd) {
  const double s2 = spec.sigma_obs * spec.sigma_obs;
  double sum = 0.0;
  for (double v : y.values) sum += v;
  const double precision =
      1.0 / (prior_sd * prior_sd) + static_cast<double>(y.size()) / s2;
  const double mean = (prior_mean / (prior_sd * prior_sd) + sum / s2) / precision;
  return {mean, 1.0 / std::sqrt(precision)};
}

namespace {

double normal_sum_log_lik(const Dataset& y, double mu, double sigma) {
  double s = 0.0;
  for (double v : y.values) s += normal_log_pdf(v, mu, sigma);
  return s;
}

std::vector<TestQuantity> nested_normal_quantities(const NestedNormal& spec) {
  return {model_index_quantity(),
          {"log_lik", [spec](int i, std::span<const double> theta,
                             const Dataset& y) {
             const double mu = i == 1 && !theta.empty() ? theta[0] : 0.0;
             return normal_sum_log_lik(y, mu, spec.sigma_obs);
           }},
          {"mu",
           [](int i, std::span<const double> theta, const Dataset&) {
             return i == 1 && !theta.empty() ? theta[0] : kMissing;
           }}};
}

}  // namespace

BmaProblem nested_normal_problem(const NestedNormal& spec, double prior_m1) {
  auto data_sampler = [spec](const ParamDraw& theta, std::size_t n, Rng& rng) {
    const double mu = theta.empty() ? 0.0 : theta[0];
    Dataset d;
    for (std::size_t k = 0; k < n; ++k)
      d.values.push_back(mu + spec.sigma_obs * std_normal(rng));
    return d;
  };
  SubmodelSpec m0{0, {}, data_sampler,
                  [spec](const Dataset& y) {
                    return nested_normal_log_marginals(y, spec).log_m0;
                  },
                  {}};
  SubmodelSpec m1{
      1,
      [spec](Rng& rng) { return ParamDraw{spec.prior_sd_mu * std_normal(rng)}; },
      data_sampler,
      [spec](const Dataset& y) {
        return nested_normal_log_marginals(y, spec).log_m1;
      },
      [spec](const Dataset& y, std::size_t M, Rng& rng) {
        const auto post = nested_normal_posterior(y, spec, 0.0, spec.prior_sd_mu);
        std::vector<ParamDraw> draws(M);
        for (auto& d : draws) d = {post.mean + post.sd * std_normal(rng)};
        return draws;
      }};
  BfComputer truth{"nested-normal-true", [spec](const Dataset& y, Rng&) {
                     const auto lm = nested_normal_log_marginals(y, spec);
                     return lm.log_m1 - lm.log_m0;
                   }};
  return BmaProblem("nested-normal", std::move(m0), std::move(m1), prior_m1,
                    std::move(truth), spec.n_obs,
                    nested_normal_quantities(spec));
}

// ---------------------------------------------------------------------------

std::vector<std::string> model_names() {
  return {"binary-toy", "poisson-nb", "good-cauchy", "good-normal",
          "nested-normal"};
}

namespace {

std::string valid_models_message(const std::string& model) {
  std::string msg = "unknown model '" + model + "'; valid models:";
  for (const auto& n : model_names()) msg += " " + n;
  return msg;
}

GoodPair parse_good_normal(const std::string& model) {
  GoodPair pair{GoodPair::Variant::normal_mu, 2.0};
  const auto colon = model.find(':');
  if (colon != std::string::npos) {
    try {
      pair.mu = std::stod(model.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error("good-normal expects good-normal:MU with numeric MU");
    }
  }
  return pair;
}

}  // namespace

BmaProblem make_problem(const std::string& model) {
  if (model == "binary-toy") return binary_toy_problem();
  if (model == "poisson-nb") return poisson_nb_problem();
  if (model == "good-cauchy")
    return good_pair_problem({GoodPair::Variant::cauchy, 0.0});
  if (model.rfind("good-normal", 0) == 0 &&
      (model.size() == 11 || model[11] == ':'))
    return good_pair_problem(parse_good_normal(model));
  if (model == "nested-normal") return nested_normal_problem();
  throw Error(valid_models_message(model));
}

std::vector<TestQuantity> builtin_quantities(const std::string& model) {
  return make_problem(model).quantities();
}

}  // namespace bfcheck::zoo
