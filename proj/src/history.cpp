#include "bfcheck/history.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "bfcheck/error.hpp"
#include "bfcheck/faults.hpp"
#include "bfcheck/stats/calibration.hpp"
#include "bfcheck/stats/dap.hpp"
#include "bfcheck/stats/gamma.hpp"
#include "bfcheck/zoo.hpp"

namespace bfcheck {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Run f(i) for i in [0, n) on up to `jobs` threads, rethrowing the first
// failure. Work is split by index so results never depend on scheduling.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& f) {
  const unsigned k = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  std::vector<std::exception_ptr> errors(k);
  auto worker = [&](unsigned t) {
    try {
      for (std::size_t i = t; i < n; i += k) f(i);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  if (k == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < k; ++t) threads.emplace_back(worker, t);
    for (auto& th : threads) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::uint64_t history_seed(std::uint64_t seed, std::size_t h) {
  return splitmix64(seed ^ splitmix64(0x686973746f7279ULL + h));
}

}  // namespace

std::size_t history_step(const HistoryConfig& cfg) {
  if (cfg.step > 0) return cfg.step;
  const std::size_t L = cfg.history_length;
  return L <= 300 ? 1 : 10;
}

std::vector<std::size_t> history_grid(const HistoryConfig& cfg) {
  if (cfg.history_length == 0) throw Error("history length must be at least 1");
  const std::size_t step = history_step(cfg);
  std::vector<std::size_t> grid;
  for (std::size_t n = step; n < cfg.history_length; n += step) grid.push_back(n);
  grid.push_back(cfg.history_length);
  return grid;
}

std::vector<std::vector<std::size_t>> build_histories(const RecordSet& pool,
                                                      const HistoryConfig& cfg,
                                                      std::uint64_t seed) {
  const std::size_t L = cfg.history_length;
  if (L == 0) throw Error("history length must be at least 1");
  if (cfg.n_histories == 0) throw Error("need at least one history");
  if (cfg.pool_multiplier == 0) throw Error("pool multiplier must be at least 1");
  const std::size_t need = cfg.pool_multiplier * L;
  const std::size_t have = pool.records.size();
  if (have < need)
    throw Error("pool too small: histories of length " + std::to_string(L) +
                " need " + std::to_string(need) + " simulations, pool has " +
                std::to_string(have) + "; raise --sims or lower the length");
  std::vector<std::vector<std::size_t>> out(cfg.n_histories);
  std::vector<std::size_t> perm(have);
  for (std::size_t h = 0; h < cfg.n_histories; ++h) {
    Rng rng = derive_stream(seed, h + 1, 0x68697374);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 0; i < L; ++i) {
      const auto j = static_cast<std::size_t>(
          uniform_int(rng, static_cast<std::int64_t>(i),
                      static_cast<std::int64_t>(have) - 1));
      std::swap(perm[i], perm[j]);
    }
    out[h].assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(L));
  }
  return out;
}

HistoryRow evaluate_history(const RecordSet& pool,
                            std::span<const std::size_t> indices,
                            const std::string& check, const HistoryConfig& cfg,
                            std::uint64_t seed) {
  HistoryConfig local = cfg;
  local.history_length = indices.size();
  const auto grid = history_grid(local);
  HistoryRow row;
  row.statistic.assign(grid.size(), kNaN);
  row.reject.assign(grid.size(), kNaN);

  const bool is_sbc = check.rfind("sbc:", 0) == 0;
  if (!is_sbc && check != "miscalibration" && check != "dap" && check != "dap-welch")
    throw Error("unknown check '" + check +
                "'; valid checks: sbc:<quantity>, miscalibration, dap, dap-welch");
  const std::size_t q = is_sbc ? pool.quantity_index(check.substr(4)) : 0;
  const int M = static_cast<int>(pool.config.n_draws);

  std::vector<std::size_t> counts(is_sbc ? M + 1 : 0, 0);
  std::vector<double> probs;
  std::vector<int> outcomes;
  std::size_t S = 0, next = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (; next < grid[g]; ++next) {
      const SimulationRecord& r = pool.records.at(indices[next]);
      if (r.failed) continue;
      ++S;
      if (is_sbc)
        ++counts.at(static_cast<std::size_t>(r.ranks.at(q)));
      else {
        probs.push_back(r.p_m1);
        outcomes.push_back(r.true_index);
      }
    }
    try {
      if (is_sbc) {
        if (S < 2) continue;
        const auto table = gamma_null_quantile(S, M, cfg.alpha, cfg.gamma_n_mc, 0);
        const double lr = log_gamma_statistic_from_counts(counts) - table.log_quantile;
        row.statistic[g] = lr;
        row.reject[g] = lr < 0.0 ? 1.0 : 0.0;
        continue;
      }
      CheckReport rep;
      if (check == "miscalibration") {
        rep = miscalibration_test(probs, outcomes, cfg.bootstrap_B, seed, cfg.alpha, true);
        row.statistic[g] = rep.threshold_or_pvalue;
      } else {
        if (S < 2) continue;
        rep = check == "dap" ? dap_t_test(probs, pool.prior_m1, cfg.alpha)
                             : dap_welch(probs, outcomes, cfg.alpha);
        row.statistic[g] = rep.threshold_or_pvalue;
      }
      row.reject[g] = rep.rejected() ? 1.0 : 0.0;
    } catch (const DegenerateInputError&) {
      // Undefined for this prefix; leave as missing.
    }
  }
  return row;
}

std::vector<HistoryCurve> run_histories(const RecordSet& pool,
                                        std::span<const std::string> checks,
                                        const HistoryConfig& cfg,
                                        std::uint64_t seed) {
  const auto histories = build_histories(pool, cfg, seed);
  const auto grid = history_grid(cfg);
  std::vector<HistoryCurve> curves(checks.size());
  for (std::size_t c = 0; c < checks.size(); ++c) {
    curves[c].check_name = checks[c];
    curves[c].grid = grid;
    curves[c].rows.resize(histories.size());
  }
  if (std::any_of(checks.begin(), checks.end(),
                  [](const std::string& c) { return c.rfind("sbc:", 0) == 0; }))
    precompute_gamma_null(grid, static_cast<int>(pool.config.n_draws), cfg.gamma_n_mc, 0);
  parallel_for(histories.size(), cfg.jobs, [&](std::size_t h) {
    for (std::size_t c = 0; c < checks.size(); ++c)
      curves[c].rows[h] =
          evaluate_history(pool, histories[h], checks[c], cfg, history_seed(seed, h));
  });
  return curves;
}

PowerCurve power_curve(const HistoryCurve& curve) {
  if (curve.rows.size() < 20) throw Error("power curves need at least 20 histories");
  PowerCurve pc;
  pc.grid = curve.grid;
  pc.power.assign(curve.grid.size(), 0.0);
  for (const auto& row : curve.rows)
    for (std::size_t g = 0; g < curve.grid.size(); ++g)
      if (row.reject[g] == 1.0) pc.power[g] += 1.0;
  for (std::size_t g = 0; g < curve.grid.size(); ++g) {
    pc.power[g] /= static_cast<double>(curve.rows.size());
    if (!pc.first_80_power && pc.power[g] >= 0.8) pc.first_80_power = curve.grid[g];
  }
  return pc;
}

std::vector<std::string> default_checks(const RecordSet& records) {
  std::vector<std::string> out;
  for (const auto& q : records.quantity_names) out.push_back("sbc:" + q);
  out.insert(out.end(), {"miscalibration", "dap", "dap-welch"});
  return out;
}

// ---------------------------------------------------------------------------

std::vector<TableCell> fp_power_table(std::span<const TableScenario> scenarios,
                                      const TableConfig& cfg, std::uint64_t seed) {
  if (cfg.n_runs == 0) throw Error("need at least one run");
  std::vector<std::string> tests{"t", "gaffke"};
  for (double r : cfg.jzs_scales) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "jzs:%.4g", r);
    tests.emplace_back(buf);
  }
  const std::size_t n_tests = tests.size();
  std::vector<TableCell> cells;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const BmaProblem& problem = scenarios[s].problem;
    const double prior = problem.prior_m1().value();
    for (std::size_t n : cfg.sample_sizes) {
      if (n < 2) throw Error("table sample sizes must be at least 2");
      // rejections[run * n_tests + test]
      std::vector<unsigned char> rejections(cfg.n_runs * n_tests, 0);
      parallel_for(cfg.n_runs, cfg.jobs, [&](std::size_t run) {
        Rng rng = derive_stream(seed ^ splitmix64(s * 1000003ULL + n), run + 1, 0x7461626c);
        std::vector<double> probs(n);
        for (auto& p : probs) {
          const PriorDraw d = prior_predictive_draw(problem, problem.n_obs(), rng);
          const double lbf = problem.candidate_bf()(d.data, rng);
          p = posterior_model_prob(lbf, problem.conversion_prior()).value();
        }
        unsigned char* rej = rejections.data() + run * n_tests;
        try {
          rej[0] = dap_t_test(probs, prior, cfg.alpha).rejected();
        } catch (const DegenerateInputError&) {
        }
        rej[1] = gaffke_test(probs, prior, cfg.gaffke_n_mc, seed, cfg.alpha).rejected();
        for (std::size_t k = 0; k < cfg.jzs_scales.size(); ++k) {
          try {
            rej[2 + k] = dap_jzs(probs, prior, cfg.jzs_scales[k]).rejected();
          } catch (const DegenerateInputError&) {
          }
        }
      });
      for (std::size_t t = 0; t < n_tests; ++t) {
        std::size_t count = 0;
        for (std::size_t run = 0; run < cfg.n_runs; ++run)
          count += rejections[run * n_tests + t];
        TableCell cell;
        cell.scenario = scenarios[s].name;
        cell.n = n;
        cell.test = tests[t];
        cell.n_runs = cfg.n_runs;
        cell.rate = static_cast<double>(count) / static_cast<double>(cfg.n_runs);
        cell.se = std::sqrt(cell.rate * (1.0 - cell.rate) / static_cast<double>(cfg.n_runs));
        cells.push_back(cell);
      }
    }
  }
  return cells;
}

std::vector<TableScenario> default_table_scenarios() {
  std::vector<TableScenario> out;
  out.push_back({"good-cauchy", zoo::make_problem("good-cauchy")});
  out.push_back({"good-normal", zoo::make_problem("good-normal:2")});
  const BmaProblem pnb = zoo::make_problem("poisson-nb");
  out.push_back({"poisson-nb-bias",
                 pnb.with_candidate(apply_fault(pnb.true_bf(), parse_fault("log-bias:2")))});
  return out;
}

}  // namespace bfcheck
