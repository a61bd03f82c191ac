#pragma once

// Binary prediction calibration: isotonic recalibration and the CORP
// miscalibration component of the Brier score.

#include <cstdint>
#include <span>
#include <vector>

#include "bfcheck/stats/check_report.hpp"

namespace bfcheck {

/// Isotonic least-squares fit of outcomes on probs, returned in input order.
/// Observations with equal probs are pooled before fitting.
std::vector<double> pav_recalibrate(std::span<const double> probs,
                                    std::span<const int> outcomes);

/// Mean Brier score of probs minus that of their isotonic recalibration.
double miscalibration_mcb(std::span<const double> probs,
                          std::span<const int> outcomes);

inline constexpr std::size_t kDefaultBootstrap = 2000;

/// Bootstrap test of calibration: outcomes are resampled as Bernoulli(probs).
/// p = (1 + #{MCB* >= MCB}) / (B + 1). Extras: mcb, q95 (null 95% quantile),
/// p_floor (1 when p is the smallest attainable value), bootstrap (replicates
/// used). With stop_when_decided the loop ends as soon as enough replicates
/// exceed MCB that the test cannot reject; the decision is unchanged and p is
/// then the sequential estimate (1 + exceed) / (used + 1).
CheckReport miscalibration_test(std::span<const double> probs,
                                std::span<const int> outcomes,
                                std::size_t B = kDefaultBootstrap,
                                std::uint64_t seed = 0,
                                double alpha = kDefaultAlpha,
                                bool stop_when_decided = false);

/// Points of the isotonic reliability curve: one per fitted block.
struct ReliabilityPoint {
  double prob_low = 0.0;
  double prob_high = 0.0;
  double fitted = 0.0;
  std::size_t count = 0;
};
std::vector<ReliabilityPoint> reliability_curve(std::span<const double> probs,
                                                std::span<const int> outcomes);

}  // namespace bfcheck
