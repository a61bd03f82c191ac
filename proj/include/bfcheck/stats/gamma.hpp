#pragma once

// ECDF uniformity statistic for SBC ranks and its Monte-Carlo null.

#include <cstdint>
#include <span>
#include <string>

#include "bfcheck/stats/check_report.hpp"

namespace bfcheck {

/// min over j = 1..M of 2 min(F(R_j), 1 - F(R_j - 1)), clamped to 1, where
/// F is the Binomial(S, j / (M + 1)) CDF and R_j = #{ranks < j}.
double gamma_statistic(std::span<const int> ranks, int M);
/// The same in log space; finite even when the statistic underflows.
double log_gamma_statistic(std::span<const int> ranks, int M);
/// From the rank histogram: counts[r] = #{ranks == r}, r = 0..M.
double log_gamma_statistic_from_counts(std::span<const std::size_t> counts);

struct GammaNullTable {
  std::size_t S = 0;
  int M = 0;
  double alpha = kDefaultAlpha;
  double quantile = 1.0;
  double log_quantile = 0.0;
  std::size_t n_mc = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultGammaNullReplicates = 10'000;

/// Empirical alpha-quantile of the statistic over n_mc sets of S iid
/// uniform{0..M} ranks. Results are cached; safe to call concurrently.
GammaNullTable gamma_null_quantile(std::size_t S, int M,
                                   double alpha = kDefaultAlpha,
                                   std::size_t n_mc = kDefaultGammaNullReplicates,
                                   std::uint64_t seed = 0);

/// Fill the cache for several S at once; later gamma_null_quantile calls
/// with the same (M, n_mc, seed) return identical tables either way.
void precompute_gamma_null(std::span<const std::size_t> sizes, int M,
                           std::size_t n_mc = kDefaultGammaNullReplicates,
                           std::uint64_t seed = 0);

/// log(statistic / quantile); negative means reject at table.alpha.
double log_gamma_ratio(std::span<const int> ranks, int M,
                       const GammaNullTable& table);

/// Gamma check on one quantity. The statistic is the log ratio; extras hold
/// the raw statistic, the null quantile and the detectable ECDF deviation.
CheckReport sbc_check(const std::string& quantity, std::span<const int> ranks,
                      int M, double alpha = kDefaultAlpha,
                      std::size_t n_mc = kDefaultGammaNullReplicates,
                      std::uint64_t seed = 0);

/// Smallest deviation d of the ECDF from the uniform CDF at its midpoint that
/// the check would detect with S ranks.
double sbc_sensitivity(std::size_t S, double alpha = kDefaultAlpha,
                       int M = 999,
                       std::size_t n_mc = kDefaultGammaNullReplicates,
                       std::uint64_t seed = 0);

/// Two-sided pointwise binomial band of the ECDF used by the statistic:
/// the ECDF at z must lie within [lower, upper] to pass the null quantile.
struct EcdfBand {
  double z = 0.0;
  double lower = 0.0;
  double upper = 1.0;
};
EcdfBand gamma_band_at(std::size_t S, double z, double log_gamma_threshold);

}  // namespace bfcheck
