#include "bfcheck/stats/good.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "bfcheck/error.hpp"
#include "bfcheck/rng.hpp"

namespace bfcheck {

CheckReport good_check_summary(std::span<const double> log_bf01,
                               std::size_t n_mc, std::uint64_t seed) {
  const std::size_t n = log_bf01.size();
  if (n < 2) throw Error("Good check needs at least 2 Bayes factors");
  if (n_mc < 100) throw Error("need at least 100 Monte-Carlo replicates");
  std::vector<double> bf(n);
  for (std::size_t i = 0; i < n; ++i) bf[i] = std::exp(log_bf01[i]);
  const double nd = static_cast<double>(n);
  double mean = 0.0;
  for (double b : bf) mean += b;
  mean /= nd;
  double ss = 0.0;
  for (double b : bf) ss += (b - mean) * (b - mean);
  const double var = ss / (nd - 1.0);

  // Lower bound for the mean of a nonnegative variable: Dirichlet-weighted
  // means with one extra point at the support minimum 0.
  Rng rng = derive_stream(seed, n, 0x676f6f64);
  std::vector<double> means(n_mc);
  for (std::size_t b = 0; b < n_mc; ++b) {
    double total = -std::log1p(-uniform01(rng));
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = -std::log1p(-uniform01(rng));
      total += w;
      s += w * bf[i];
    }
    means[b] = s / total;
  }
  const auto k = static_cast<std::size_t>(
      std::max(0.0, std::ceil(0.05 * static_cast<double>(n_mc)) - 1.0));
  std::nth_element(means.begin(), means.begin() + static_cast<std::ptrdiff_t>(k),
                   means.end());
  const double lower = means[k];

  CheckReport r;
  r.check_name = "good";
  r.statistic = mean;
  r.threshold_or_pvalue = 1.0;
  r.decision = lower > 1.0 ? Decision::reject : Decision::pass;
  r.n_sims_used = n;
  r.extras["mean"] = mean;
  r.extras["sem"] = std::sqrt(var / nd);
  r.extras["variance"] = var;
  r.extras["lower_bound"] = lower;
  r.extras["conclusive"] = lower > 1.0 ? 1.0 : 0.0;
  return r;
}

}  // namespace bfcheck
