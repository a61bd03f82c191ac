#pragma once

// Good check: under the right model, E[BF in favor of the wrong model] = 1.

#include <cstdint>
#include <span>

#include "bfcheck/stats/check_report.hpp"

namespace bfcheck {

/// Summary of BF_{0,1} over datasets simulated from M1, from their logs.
/// Extras: mean, sem, variance, lower_bound (one-sided 95% nonparametric
/// bound on the mean), conclusive (1 when lower_bound > 1). The decision is
/// reject only when the bound exceeds 1; a small mean is inconclusive.
CheckReport good_check_summary(std::span<const double> log_bf01_under_m1,
                               std::size_t n_mc = 1000, std::uint64_t seed = 0);

}  // namespace bfcheck
