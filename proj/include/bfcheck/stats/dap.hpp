#pragma once

// Data-averaged posterior tests: the mean posterior model probability must
// equal the prior.

#include <cstdint>
#include <span>

#include "bfcheck/stats/check_report.hpp"

namespace bfcheck {

/// One-sample t-test of mean(probs) = prior_m1, two-sided. Extras: mean,
/// diff, ci_low, ci_high (95% interval for mean - prior), df.
/// Throws DegenerateInputError when every prob is identical.
CheckReport dap_t_test(std::span<const double> probs, double prior_m1,
                       double alpha = kDefaultAlpha);

/// Welch two-sample test of mean(probs) = mean(indicators), two-sided. Used
/// when the prior is estimated from the simulated model indices.
CheckReport dap_welch(std::span<const double> probs,
                      std::span<const int> indicators,
                      double alpha = kDefaultAlpha);

inline constexpr std::size_t kDefaultGaffkeReplicates = 10'000;

/// Two-sided Monte-Carlo test of E[X] = mu0 for X in [0, 1], built from the
/// Gaffke confidence bounds on the mean of X and of 1 - X. Extras: p_upper,
/// p_lower, ci_low, ci_high.
CheckReport gaffke_test(std::span<const double> xs, double mu0,
                        std::size_t n_mc = kDefaultGaffkeReplicates,
                        std::uint64_t seed = 0, double alpha = kDefaultAlpha);

/// log BF_{10} of the JZS one-sample t-test of mean = mu0 with Cauchy scale
/// r_scale on the standardized effect.
double jzs_ttest_log_bf(std::span<const double> xs, double r_scale,
                        double mu0 = 0.0);
/// Same from the t statistic and sample size.
double jzs_log_bf_from_t(double t, std::size_t n, double r_scale);

/// Default JZS decision rule: reject when BF_{10} exceeds this.
inline constexpr double kJzsRejectBf = 10.0;

/// DAP check using the JZS Bayes factor of probs against prior_m1.
CheckReport dap_jzs(std::span<const double> probs, double prior_m1,
                    double r_scale, double reject_bf = kJzsRejectBf);

}  // namespace bfcheck
