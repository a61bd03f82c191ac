#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "bfcheck/error.hpp"
#include "bfcheck/faults.hpp"
#include "bfcheck/history.hpp"
#include "bfcheck/stats/calibration.hpp"
#include "bfcheck/stats/dap.hpp"
#include "bfcheck/zoo.hpp"

using namespace bfcheck;

namespace {

RecordSet pool_for(const std::string& model, const std::string& fault, std::size_t n,
                   std::uint64_t seed) {
  auto p = zoo::make_problem(model);
  if (!fault.empty()) p = p.with_candidate(apply_fault(p.true_bf(), parse_fault(fault)));
  EngineConfig cfg;
  cfg.n_sims = n;
  cfg.master_seed = seed;
  return run_sbc(p, cfg);
}

HistoryCurve constant_curve(std::size_t histories, std::size_t len, double reject) {
  HistoryCurve c;
  c.check_name = "x";
  for (std::size_t n = 1; n <= len; ++n) c.grid.push_back(n);
  HistoryRow row;
  row.statistic.assign(len, 0.0);
  row.reject.assign(len, reject);
  c.rows.assign(histories, row);
  return c;
}

}  // namespace

TEST(HistoryGrid, StepRules) {
  HistoryConfig cfg;
  cfg.history_length = 200;
  const auto g = history_grid(cfg);
  ASSERT_EQ(g.size(), 200u);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i], i + 1);

  cfg.history_length = 5000;
  const auto big = history_grid(cfg);
  EXPECT_EQ(big.back(), 5000u);
  for (std::size_t i = 1; i < big.size(); ++i) {
    EXPECT_GT(big[i], big[i - 1]);
    EXPECT_LE(big[i] - big[i - 1], 10u);
  }
  cfg.history_length = 305;
  EXPECT_EQ(history_grid(cfg).back(), 305u);
  cfg.history_length = 0;
  EXPECT_THROW(history_grid(cfg), Error);
}

TEST(BuildHistories, FullPermutation) {
  const auto pool = pool_for("binary-toy", "", 50, 1);
  HistoryConfig cfg;
  cfg.history_length = 50;
  cfg.n_histories = 1;
  cfg.pool_multiplier = 1;
  auto h = build_histories(pool, cfg, 3);
  ASSERT_EQ(h.size(), 1u);
  std::sort(h[0].begin(), h[0].end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(h[0][i], i);
}

TEST(BuildHistories, WithoutReplacementAndSeeded) {
  const auto pool = pool_for("binary-toy", "", 400, 1);
  HistoryConfig cfg;
  cfg.history_length = 40;
  cfg.n_histories = 30;
  const auto a = build_histories(pool, cfg, 5);
  const auto b = build_histories(pool, cfg, 5);
  const auto c = build_histories(pool, cfg, 6);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (const auto& h : a) {
    EXPECT_EQ(h.size(), 40u);
    EXPECT_EQ(std::set<std::size_t>(h.begin(), h.end()).size(), 40u);
    for (std::size_t i : h) EXPECT_LT(i, 400u);
  }
}

TEST(BuildHistories, PoolTooSmall) {
  const auto pool = pool_for("binary-toy", "", 100, 1);
  HistoryConfig cfg;
  cfg.history_length = 20;
  try {
    build_histories(pool, cfg, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("pool too small"), std::string::npos);
  }
}

TEST(EvaluateHistory, PrefixUsesFirstRecords) {
  const auto pool = pool_for("poisson-nb", "", 300, 2);
  HistoryConfig cfg;
  cfg.bootstrap_B = 200;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < 30; ++i) idx.push_back(299 - 7 * i);
  const auto row = evaluate_history(pool, idx, "dap", cfg);
  ASSERT_EQ(row.statistic.size(), 30u);
  EXPECT_TRUE(std::isnan(row.statistic[0]));  // one point is too few
  for (std::size_t L : {5u, 17u, 30u}) {
    std::vector<double> probs;
    for (std::size_t i = 0; i < L; ++i) probs.push_back(pool.records[idx[i]].p_m1);
    EXPECT_DOUBLE_EQ(row.statistic[L - 1], dap_t_test(probs, 0.5).threshold_or_pvalue);
  }
  const auto m = evaluate_history(pool, idx, "miscalibration", cfg, 4);
  std::vector<double> probs;
  std::vector<int> out;
  for (std::size_t i = 0; i < 30; ++i) {
    probs.push_back(pool.records[idx[i]].p_m1);
    out.push_back(pool.records[idx[i]].true_index);
  }
  EXPECT_EQ(m.reject.back(),
            miscalibration_test(probs, out, 200, 4).rejected() ? 1.0 : 0.0);
}

TEST(EvaluateHistory, UnknownCheck) {
  const auto pool = pool_for("binary-toy", "", 20, 2);
  std::vector<std::size_t> idx{0, 1, 2};
  HistoryConfig cfg;
  EXPECT_THROW(evaluate_history(pool, idx, "wobble", cfg), Error);
  EXPECT_THROW(evaluate_history(pool, idx, "sbc:nope", cfg), Error);
}

TEST(RunHistories, IndependentOfJobs) {
  const auto pool = pool_for("poisson-nb", "log-noise:2", 600, 3);
  HistoryConfig cfg;
  cfg.history_length = 60;
  cfg.n_histories = 20;
  cfg.bootstrap_B = 100;
  cfg.gamma_n_mc = 1000;
  const std::vector<std::string> checks{"sbc:var_y", "miscalibration", "dap"};
  cfg.jobs = 1;
  const auto a = run_histories(pool, checks, cfg, 8);
  cfg.jobs = 3;
  const auto b = run_histories(pool, checks, cfg, 8);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t c = 0; c < a.size(); ++c) {
    EXPECT_EQ(a[c].check_name, checks[c]);
    ASSERT_EQ(a[c].rows.size(), 20u);
    for (std::size_t h = 0; h < 20; ++h) {
      ASSERT_EQ(a[c].rows[h].reject.size(), a[c].grid.size());
      for (std::size_t g = 0; g < a[c].grid.size(); ++g) {
        const double x = a[c].rows[h].statistic[g], y = b[c].rows[h].statistic[g];
        EXPECT_TRUE((std::isnan(x) && std::isnan(y)) || x == y);
      }
    }
  }
}

TEST(PowerCurve, EdgeCases) {
  const auto all = power_curve(constant_curve(25, 10, 1.0));
  ASSERT_TRUE(all.first_80_power.has_value());
  EXPECT_EQ(*all.first_80_power, 1u);
  const auto none = power_curve(constant_curve(25, 10, 0.0));
  EXPECT_FALSE(none.first_80_power.has_value());
  const auto undefined = power_curve(constant_curve(25, 10, std::nan("")));
  EXPECT_EQ(undefined.power[3], 0.0);
  EXPECT_THROW(power_curve(constant_curve(19, 10, 1.0)), Error);
}

TEST(PowerCurve, FlippedBinaryToyDetectedQuickly) {
  const auto pool = pool_for("binary-toy", "flip", 2000, 4);
  HistoryConfig cfg;
  cfg.history_length = 200;
  cfg.n_histories = 100;
  const std::vector<std::string> checks{"miscalibration"};
  const auto curves = run_histories(pool, checks, cfg, 1);
  const auto pc = power_curve(curves[0]);
  ASSERT_TRUE(pc.first_80_power.has_value());
  EXPECT_LE(*pc.first_80_power, 200u);
  // Power grows with the prefix, up to noise.
  EXPECT_GE(pc.power.back(), pc.power.front() - 0.1);
}

TEST(DefaultChecks, ListsEveryQuantity) {
  const auto pool = pool_for("poisson-nb", "", 5, 1);
  const auto c = default_checks(pool);
  const std::vector<std::string> want{"sbc:model_index", "sbc:log_lik", "sbc:var_y",
                                      "miscalibration", "dap", "dap-welch"};
  EXPECT_EQ(c, want);
}

TEST(FpPowerTable, ShapeAndDeterminism) {
  auto scenarios = default_table_scenarios();
  ASSERT_EQ(scenarios.size(), 3u);
  TableConfig cfg;
  cfg.sample_sizes = {10};
  cfg.n_runs = 40;
  cfg.gaffke_n_mc = 1000;
  const std::vector<TableScenario> one{scenarios[2]};
  const auto a = fp_power_table(one, cfg, 3);
  ASSERT_EQ(a.size(), 5u);
  EXPECT_EQ(a[0].test, "t");
  EXPECT_EQ(a[1].test, "gaffke");
  EXPECT_EQ(a[2].test, "jzs:0.08333");
  EXPECT_EQ(a[3].test, "jzs:0.7071");
  EXPECT_EQ(a[4].test, "jzs:1.5");
  cfg.jobs = 2;
  const auto b = fp_power_table(one, cfg, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].rate, b[i].rate);
    EXPECT_NEAR(a[i].se, std::sqrt(a[i].rate * (1 - a[i].rate) / 40), 1e-15);
  }
}

// Target rates at reduced run counts.
TEST(FpPowerTable, KnownRates) {
  const auto scenarios = default_table_scenarios();
  TableConfig cfg;
  cfg.n_runs = 400;
  cfg.gaffke_n_mc = 2000;
  cfg.jzs_scales = {};
  cfg.sample_sizes = {10};
  const std::vector<TableScenario> cauchy{scenarios[0]}, bias{scenarios[2]};
  const auto c = fp_power_table(cauchy, cfg, 1);
  EXPECT_GE(c[0].rate, 0.15);  // t-test
  EXPECT_LE(c[1].rate, 0.02);  // gaffke
  const auto p = fp_power_table(bias, cfg, 1);
  EXPECT_GE(p[0].rate, 0.80);
  cfg.sample_sizes = {100};
  cfg.n_runs = 1000;
  const std::vector<TableScenario> normal{scenarios[1]};
  const auto n = fp_power_table(normal, cfg, 1);
  EXPECT_NEAR(n[0].rate, 0.052, 0.02);
  cfg.n_runs = 400;
  cfg.sample_sizes = {20};
  EXPECT_GE(fp_power_table(bias, cfg, 1)[1].rate, 0.90);
  cfg.sample_sizes = {50};
  EXPECT_GE(fp_power_table(bias, cfg, 1)[0].rate, 0.97);
}
