#pragma once

#include <cstddef>
#include <map>
#include <string>

namespace bfcheck {

enum class Decision { pass, reject };

struct CheckReport {
  std::string check_name;
  double statistic = 0.0;
  /// p-value for tests that have one, otherwise the rejection threshold.
  double threshold_or_pvalue = 0.0;
  Decision decision = Decision::pass;
  std::size_t n_sims_used = 0;
  std::map<std::string, double> extras;

  bool rejected() const { return decision == Decision::reject; }
  /// Throws bfcheck::Error when the extra is absent.
  double extra(const std::string& name) const;
};

const char* to_string(Decision d);

/// Default significance level of every check.
inline constexpr double kDefaultAlpha = 0.05;

}  // namespace bfcheck
