#pragma once

// Statistic histories over resampled prefixes of a simulation pool, power
// curves, and the DAP test-comparison table.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bfcheck/engine.hpp"
#include "bfcheck/stats/check_report.hpp"

namespace bfcheck {

struct HistoryConfig {
  std::size_t history_length = 200;
  std::size_t n_histories = 100;
  /// Grid step; 0 picks 1 up to 300 simulations and 10 beyond.
  std::size_t step = 0;
  std::size_t pool_multiplier = 10;
  std::size_t bootstrap_B = 2000;
  std::size_t gamma_n_mc = 10'000;
  double alpha = kDefaultAlpha;
  unsigned jobs = 1;
};

std::size_t history_step(const HistoryConfig& cfg);
/// Simulation counts at which statistics are evaluated: step, 2 step, ...,
/// always ending at history_length.
std::vector<std::size_t> history_grid(const HistoryConfig& cfg);

/// n_histories uniform without-replacement samples of history_length pool
/// positions, each in random order.
std::vector<std::vector<std::size_t>> build_histories(const RecordSet& pool,
                                                      const HistoryConfig& cfg,
                                                      std::uint64_t seed);

/// Per-grid-point statistic and decision of one history. NaN marks grid points
/// where the check is undefined (too few simulations, degenerate input).
struct HistoryRow {
  std::vector<double> statistic;
  std::vector<double> reject;  // 1, 0 or NaN
};

/// Checks: sbc:<quantity> | miscalibration | dap | dap-welch.
HistoryRow evaluate_history(const RecordSet& pool,
                            std::span<const std::size_t> indices,
                            const std::string& check, const HistoryConfig& cfg,
                            std::uint64_t seed = 0);

struct HistoryCurve {
  std::string check_name;
  std::vector<std::size_t> grid;
  std::vector<HistoryRow> rows;  // one per history
};

/// Evaluate every check on every history. Deterministic in (pool, cfg, seed)
/// and independent of cfg.jobs.
std::vector<HistoryCurve> run_histories(const RecordSet& pool,
                                        std::span<const std::string> checks,
                                        const HistoryConfig& cfg,
                                        std::uint64_t seed);

struct PowerCurve {
  std::vector<std::size_t> grid;
  /// Share of histories rejecting at each grid point; histories where the
  /// check is undefined count as not rejecting.
  std::vector<double> power;
  std::optional<std::size_t> first_80_power;
};

PowerCurve power_curve(const HistoryCurve& curve);

/// Checks valid for a record set: sbc:<q> for each quantity, miscalibration,
/// dap, dap-welch.
std::vector<std::string> default_checks(const RecordSet& records);

// ---------------------------------------------------------------------------
// DAP test comparison
// ---------------------------------------------------------------------------

struct TableScenario {
  std::string name;
  BmaProblem problem;
};

struct TableCell {
  std::string scenario;
  std::size_t n = 0;
  std::string test;  // t | gaffke | jzs:<r>
  double rate = 0.0;
  double se = 0.0;
  std::size_t n_runs = 0;
};

struct TableConfig {
  std::vector<std::size_t> sample_sizes{10, 20, 50, 100};
  std::vector<double> jzs_scales{1.0 / 12.0, 0.70710678118654752440, 1.5};
  std::size_t n_runs = 1000;
  std::size_t gaffke_n_mc = 10'000;
  double alpha = kDefaultAlpha;
  unsigned jobs = 1;
};

/// Rejection rates of the DAP tests on fresh posterior model probabilities:
/// each run simulates n datasets from the scenario and tests their mean
/// against the prior.
std::vector<TableCell> fp_power_table(std::span<const TableScenario> scenarios,
                                      const TableConfig& cfg, std::uint64_t seed);

/// Scenarios of the desk-scale table: good-cauchy, good-normal (mu = 2) and
/// poisson-nb with a +2 log-bias fault.
std::vector<TableScenario> default_table_scenarios();

}  // namespace bfcheck
