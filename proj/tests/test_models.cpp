#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bfcheck/bma.hpp"
#include "bfcheck/error.hpp"
#include "bfcheck/faults.hpp"
#include "bfcheck/zoo.hpp"

using namespace bfcheck;

namespace {

Dataset data(std::vector<double> v) {
  Dataset d;
  d.values = std::move(v);
  return d;
}

const TestQuantity& quantity(const BmaProblem& p, const std::string& name) {
  const auto& qs = p.quantities();
  const auto it = std::find_if(qs.begin(), qs.end(), [&](const auto& q) { return q.name == name; });
  if (it == qs.end()) throw std::runtime_error("no quantity " + name);
  return *it;
}

}  // namespace

TEST(PosteriorModelProb, HandValues) {
  EXPECT_NEAR(posterior_model_prob(std::log(4.0), 0.5), 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(posterior_model_prob(0.0, 0.5), 0.5);
  EXPECT_NEAR(posterior_model_prob(std::log(4.0), 0.2), 0.5, 1e-15);
}

TEST(PosteriorModelProb, Validation) {
  EXPECT_THROW(posterior_model_prob(0.0, 0.0), Error);
  EXPECT_THROW(posterior_model_prob(0.0, 1.0), Error);
  EXPECT_THROW(posterior_model_prob(std::nan(""), 0.5), Error);
}

TEST(Probability, LogOddsRoundTripAtExtremes) {
  for (double l : {-700.0, -40.0, 0.0, 35.5, 700.0}) {
    const auto p = Probability::from_log_odds(l);
    EXPECT_EQ(logit(p), l);
    EXPECT_NEAR(p.value() + p.complement(), 1.0, 1e-15);
  }
}

TEST(PriorPredictive, BinaryToyShape) {
  const auto p = zoo::make_problem("binary-toy");
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto d = prior_predictive_draw(p, 1, rng);
    EXPECT_TRUE(d.index == 0 || d.index == 1);
    ASSERT_EQ(d.data.size(), 1u);
    EXPECT_TRUE(d.data.values[0] == 0.0 || d.data.values[0] == 1.0);
    EXPECT_EQ(d.attempts, 1u);
  }
}

TEST(PriorPredictive, AcceptRuleFiltersDatasets) {
  const auto p = zoo::make_problem("poisson-nb").with_accept(
      [](const Dataset& y) { return y.mean() > 0.0 ? 1.0 : 0.0; });
  Rng rng(2);
  for (int i = 0; i < 500; ++i) EXPECT_GT(prior_predictive_draw(p, 25, rng).data.mean(), 0.0);
  // Length-1 datasets are zero often enough that retries show.
  std::size_t retried = 0;
  for (int i = 0; i < 500; ++i) retried += prior_predictive_draw(p, 1, rng).attempts > 1;
  EXPECT_GT(retried, 0u);
}

TEST(PriorPredictive, Deterministic) {
  const auto p = zoo::make_problem("nested-normal");
  Rng a(7), b(7);
  const auto x = prior_predictive_draw(p, 5, a);
  const auto y = prior_predictive_draw(p, 5, b);
  EXPECT_EQ(x.index, y.index);
  EXPECT_EQ(x.param, y.param);
  EXPECT_EQ(x.data.values, y.data.values);
}

TEST(PriorPredictive, EmptyAcceptRegionThrows) {
  const auto p = zoo::make_problem("binary-toy").with_accept([](const Dataset&) { return 0.0; });
  Rng rng(3);
  EXPECT_THROW(prior_predictive_draw(p, 1, rng), Error);
}

TEST(ComposeBma, AllOnesWhenCertain) {
  Rng rng(4);
  const auto draws = compose_bma_draws(1.0, {}, {}, 100, rng);
  for (const auto& d : draws) {
    EXPECT_EQ(d.index, 1);
    EXPECT_EQ(d.slot, MixedDraw::npos);
  }
}

TEST(ComposeBma, MixingFraction) {
  Rng rng(5);
  const auto draws = compose_bma_draws(0.5, {}, {}, 10'000, rng);
  const auto ones = std::count_if(draws.begin(), draws.end(), [](const auto& d) { return d.index == 1; });
  EXPECT_NEAR(static_cast<double>(ones) / 10'000.0, 0.5, 0.02);
}

TEST(ComposeBma, SlotsIndexPools) {
  Rng rng(6);
  std::vector<ParamDraw> pool1;
  for (int k = 0; k < 50; ++k) pool1.push_back({static_cast<double>(k)});
  const auto draws = compose_bma_draws(0.7, {}, pool1, 50, rng);
  for (std::size_t k = 0; k < draws.size(); ++k) {
    if (draws[k].index == 1)
      EXPECT_EQ(draws[k].slot, k);
    else
      EXPECT_EQ(draws[k].slot, MixedDraw::npos);
  }
}

// ---------------------------------------------------------------------------

TEST(BinaryToy, LogBf) {
  EXPECT_NEAR(zoo::binary_toy_true_log_bf(1), std::log(4.0), 1e-15);
  EXPECT_NEAR(zoo::binary_toy_true_log_bf(0), -std::log(4.0), 1e-15);
  EXPECT_NEAR(posterior_model_prob(zoo::binary_toy_true_log_bf(0), 0.5), 0.2, 1e-15);
}

TEST(BinaryToy, CandidateReportsRequestedProbabilities) {
  const auto c = zoo::binary_toy_candidate(0.3, 0.9);
  Rng rng(1);
  EXPECT_NEAR(posterior_model_prob(c(data({0.0}), rng), 0.5), 0.3, 1e-14);
  EXPECT_NEAR(posterior_model_prob(c(data({1.0}), rng), 0.5), 0.9, 1e-14);
}

TEST(PoissonNb, PmfNormalizationAndMoments) {
  double total = 0.0, mean = 0.0, second = 0.0;
  for (int y = 0; y <= 500; ++y) {
    const double p = std::exp(zoo::nb2_log_pmf(y, 3.0, 5.0));
    total += p;
    mean += y * p;
    second += y * y * p;
  }
  EXPECT_NEAR(total, 1.0, 1e-10);
  EXPECT_NEAR(mean, 3.0, 1e-9);
  EXPECT_NEAR(second - mean * mean, 4.8, 1e-8);
  EXPECT_NEAR(zoo::nb2_log_pmf(0, 3.0, 5.0), 5.0 * std::log(5.0 / 8.0), 1e-14);
}

TEST(PoissonNb, LogBfAgainstExtendedPrecision) {
  // 50-digit evaluation of 25 (log NB2(3; 3, 5) - log Poisson(3; 3)).
  const auto y = data(std::vector<double>(25, 3.0));
  EXPECT_NEAR(zoo::poisson_nb_true_log_bf(y), -6.03088101376792181227962, 1e-12);
}

TEST(PoissonNb, AdditiveAndExchangeable) {
  const auto y = data({0, 4, 1, 7, 3, 2, 2, 9});
  const double base = zoo::poisson_nb_true_log_bf(y);
  EXPECT_NEAR(zoo::poisson_nb_true_log_bf(concat(y, y)), 2.0 * base, 1e-12);
  auto r = y;
  std::reverse(r.values.begin(), r.values.end());
  EXPECT_NEAR(zoo::poisson_nb_true_log_bf(r), base, 1e-12);
}

TEST(PoissonNb, Quantities) {
  const auto p = zoo::make_problem("poisson-nb");
  const auto y = data({1, 2, 3});
  EXPECT_DOUBLE_EQ(quantity(p, "var_y").eval(0, {}, y), 2.0);
  EXPECT_DOUBLE_EQ(quantity(p, "var_y").eval(1, {}, y), 1.0);
  double ll = 0.0;
  for (double v : y.values) ll += zoo::nb2_log_pmf(v, 3.0, 5.0);
  EXPECT_NEAR(quantity(p, "log_lik").eval(1, {}, y), ll, 1e-14);
  EXPECT_DOUBLE_EQ(quantity(p, "model_index").eval(1, {}, y), 1.0);
}

TEST(GoodPair, LogBf) {
  const zoo::GoodPair cauchy{zoo::GoodPair::Variant::cauchy, 0.0};
  EXPECT_NEAR(zoo::good_pair_true_log_bf(0.0, cauchy), -std::log(std::sqrt(2.0 / std::numbers::pi)),
              1e-15);
  EXPECT_NEAR(zoo::good_pair_true_log_bf(0.0, cauchy), 0.22579135264472743, 1e-15);
  const zoo::GoodPair normal{zoo::GoodPair::Variant::normal_mu, 2.0};
  EXPECT_NEAR(zoo::good_pair_true_log_bf(1.0, normal), 0.0, 1e-15);
}

TEST(NestedNormal, ClosedFormCases) {
  zoo::NestedNormal spec;
  spec.n_obs = 1;
  const auto one = zoo::nested_normal_log_marginals(data({0.7}), spec);
  const double sd = std::sqrt(2.0);
  EXPECT_NEAR(one.log_m1,
              -0.5 * std::log(2 * std::numbers::pi) - std::log(sd) - 0.5 * 0.49 / 2.0, 1e-14);
  const auto two = zoo::nested_normal_log_marginals(data({0.0, 0.0}), spec);
  EXPECT_NEAR(two.log_m1 - two.log_m0, -0.5 * std::log(3.0), 1e-14);
}

TEST(NestedNormal, MatchesQuadrature) {
  zoo::NestedNormal spec;
  spec.prior_sd_mu = 1.3;
  spec.sigma_obs = 0.8;
  const std::vector<double> y{0.4, -1.1, 2.0, 0.3, 0.9};
  auto integrand = [&](double mu) {
    double s = -0.5 * std::log(2 * std::numbers::pi) - std::log(1.3) - 0.5 * mu * mu / (1.3 * 1.3);
    for (double v : y)
      s += -0.5 * std::log(2 * std::numbers::pi) - std::log(0.8) -
           0.5 * (v - mu) * (v - mu) / 0.64;
    return std::exp(s);
  };
  const double m1 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, -30.0, 30.0, 15, 1e-14);
  const auto lm = zoo::nested_normal_log_marginals(data(y), spec);
  EXPECT_NEAR(lm.log_m1, std::log(m1), 1e-8);
}

TEST(NestedNormal, PosteriorIsConjugate) {
  zoo::NestedNormal spec;
  const auto post = zoo::nested_normal_posterior(data({1.0, 2.0, 3.0}), spec, 0.0, 1.0);
  // precision 1 + 3, mean 6 / 4
  EXPECT_NEAR(post.mean, 1.5, 1e-14);
  EXPECT_NEAR(post.sd, 0.5, 1e-14);
}

TEST(Zoo, UnknownModelListsValidOnes) {
  try {
    zoo::make_problem("nope");
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    for (const auto& m : zoo::model_names()) EXPECT_NE(msg.find(m), std::string::npos);
  }
  EXPECT_THROW(zoo::make_problem("good-normal:x"), Error);
  EXPECT_EQ(zoo::make_problem("good-normal:1").id(), "good-normal");
}

TEST(Zoo, QuantitiesStartWithModelIndexAndLogLik) {
  for (const auto& m : zoo::model_names()) {
    const auto qs = zoo::builtin_quantities(m);
    ASSERT_GE(qs.size(), 2u) << m;
    EXPECT_EQ(qs[0].name, "model_index");
    EXPECT_EQ(qs[1].name, "log_lik");
  }
}

// ---------------------------------------------------------------------------

TEST(Faults, Flip) {
  const auto p = zoo::make_problem("binary-toy");
  const auto f = apply_fault(p.true_bf(), parse_fault("flip"));
  Rng rng(1);
  EXPECT_NEAR(f(data({1.0}), rng), -std::log(4.0), 1e-15);
}

TEST(Faults, LogBiasIsExact) {
  const auto p = zoo::make_problem("poisson-nb");
  const auto f = apply_fault(p.true_bf(), parse_fault("log-bias:2"));
  Rng rng(1);
  const auto y = data({3, 1, 4, 1, 5});
  EXPECT_EQ(f(y, rng), p.true_bf()(y, rng) + 2.0);
}

TEST(Faults, IgnoreHalfUsesPrefix) {
  const auto p = zoo::make_problem("poisson-nb");
  const auto f = apply_fault(p.true_bf(), parse_fault("ignore-half"));
  Rng rng(2);
  Dataset y;
  for (int i = 0; i < 25; ++i) y.values.push_back((i * 7) % 6);
  EXPECT_NEAR(f(y, rng), zoo::poisson_nb_true_log_bf(y.prefix(13)), 1e-14);
}

TEST(Faults, ConstantIsEven) {
  const auto p = zoo::make_problem("poisson-nb");
  Rng rng(3);
  EXPECT_EQ(apply_fault(p.true_bf(), parse_fault("constant"))(data({9, 9}), rng), 0.0);
}

TEST(Faults, LogNoiseUsesSimulationStream) {
  const auto p = zoo::make_problem("poisson-nb");
  const auto f = apply_fault(p.true_bf(), parse_fault("log-noise:2"));
  const auto y = data({2, 3, 4});
  Rng a(5), b(5);
  EXPECT_EQ(f(y, a), f(y, b));
  double s = 0.0, ss = 0.0;
  Rng rng(6);
  const double base = zoo::poisson_nb_true_log_bf(y);
  for (int i = 0; i < 20000; ++i) {
    const double e = f(y, rng) - base;
    s += e;
    ss += e * e;
  }
  EXPECT_NEAR(s / 20000, 0.0, 0.05);
  EXPECT_NEAR(std::sqrt(ss / 20000), 2.0, 0.05);
}

TEST(Faults, ParseAndPrint) {
  for (const std::string s : {"flip", "constant", "ignore-half", "log-noise:1.5", "log-bias:-1"})
    EXPECT_EQ(to_string(parse_fault(s)), s);
  EXPECT_THROW(parse_fault("sideways"), Error);
  EXPECT_THROW(parse_fault("log-bias:abc"), Error);
}
