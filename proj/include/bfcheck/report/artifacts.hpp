#pragma once

// On-disk artifacts: records.csv, run.json, checks.json, curves.csv,
// table.csv. Every writer is a pure function of its input.

#include <iosfwd>
#include <string>
#include <vector>

#include "bfcheck/engine.hpp"
#include "bfcheck/history.hpp"
#include "bfcheck/stats/check_report.hpp"

namespace bfcheck::report {

inline constexpr const char* kRunSchema = "bfcheck.run/1";
inline constexpr const char* kChecksSchema = "bfcheck.checks/1";

/// Shortest decimal text that reads back to the same double; "nan", "inf",
/// "-inf" for non-finite values.
std::string format_double(double x);
/// 4 significant digits, for human-readable tables.
std::string format_short(double x);

/// Columns: sim_id, true_index, p_m1, rank_<quantity>..., accept_attempts,
/// mean, variance, length. Failed simulations have p_m1 = nan and empty ranks.
void write_records_csv(const RecordSet& records, std::ostream& out);
/// Inverse of write_records_csv. Problem id, prior and configuration are not
/// part of the CSV; they come from run.json.
RecordSet read_records_csv(std::istream& in);

/// Scenario description stored next to the records.
struct RunInfo {
  std::string scenario;
  std::string fault;   // empty when the candidate is correct
  std::string accept;  // empty when every dataset is accepted
};

std::string run_json(const RecordSet& records, const RunInfo& info);
/// Fill problem_id, prior_m1 and config of `records` from run.json text.
RunInfo read_run_json(const std::string& text, RecordSet& records);

std::string checks_json(const std::vector<CheckReport>& reports,
                        const std::string& problem_id, double alpha);
std::vector<CheckReport> read_checks_json(const std::string& text);

/// Long format: check, history_id, n_sims, statistic, reject.
void write_curves_csv(const std::vector<HistoryCurve>& curves, std::ostream& out);
std::vector<HistoryCurve> read_curves_csv(std::istream& in);

/// Columns: scenario, n, test, rate, se, n_runs.
void write_table_csv(const std::vector<TableCell>& cells, std::ostream& out);

/// Whole-file helpers; throw Error with the path on failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace bfcheck::report
