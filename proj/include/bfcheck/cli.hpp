#pragma once

// Command-line driver: simulate | check | history | table | report.
//
// Exit codes: 0 success (all checks pass), 2 when a check rejects, 1 on any
// error. Messages go to `err` as a single line.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bfcheck/bma.hpp"

namespace bfcheck::cli {

/// Flat config file: one `key = value` per line, `#` starts a comment.
/// Keys use the long flag names without dashes (scenario, fault, sims, ...).
std::map<std::string, std::string> parse_config(const std::string& text);

/// Keys accepted in a config file.
std::vector<std::string> config_keys();

/// Accept rules: mean-between:LO:HI keeps datasets with LO <= mean(y) <= HI;
/// mean-above:X keeps mean(y) > X.
AcceptFn parse_accept(const std::string& text);

/// Scenario from zoo model name, optional fault and optional accept rule.
BmaProblem build_scenario(const std::string& model, const std::string& fault,
                          const std::string& accept);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bfcheck::cli
