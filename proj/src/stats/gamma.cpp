#include "bfcheck/stats/gamma.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "bfcheck/error.hpp"
#include "bfcheck/rng.hpp"

namespace bfcheck {
namespace {

constexpr double kLog2 = 0.69314718055994530942;

// log(k!) for k = 0..n, grown on demand.
const std::vector<double>& log_factorials(std::size_t n) {
  thread_local std::vector<double> table{0.0};
  while (table.size() <= n) {
    const double k = static_cast<double>(table.size());
    table.push_back(table.back() + std::log(k));
  }
  return table;
}

struct GridLogs {
  int M = -1;
  std::vector<double> z, log_z, log_1mz;  // index j = 1..M
};

const GridLogs& grid_logs(int M) {
  thread_local GridLogs g;
  if (g.M != M) {
    g.M = M;
    g.z.assign(M + 1, 0.0);
    g.log_z.assign(M + 1, 0.0);
    g.log_1mz.assign(M + 1, 0.0);
    for (int j = 1; j <= M; ++j) {
      g.z[j] = static_cast<double>(j) / (M + 1);
      g.log_z[j] = std::log(g.z[j]);
      g.log_1mz[j] = std::log1p(-g.z[j]);
    }
  }
  return g;
}

struct Binom {
  std::size_t S;
  double z, log_z, log_1mz;
  const std::vector<double>& lf;

  double log_pmf(std::size_t k) const {
    return lf[S] - lf[k] - lf[S - k] + static_cast<double>(k) * log_z +
           static_cast<double>(S - k) * log_1mz;
  }

  // log P(X <= R). Returns early with some value >= `best` once the tail is
  // known to reach it.
  double log_lower_tail(std::size_t R, double best) const {
    const double lp = log_pmf(R);
    if (lp >= best) return lp;
    const double target = std::exp(best - lp);
    double sum = 1.0, t = 1.0;
    for (std::size_t k = R; k > 0; --k) {
      const double r = static_cast<double>(k) * (1.0 - z) /
                       (static_cast<double>(S - k + 1) * z);
      t *= r;
      sum += t;
      if (sum >= target) break;
      if (r < 1.0 && t * r / (1.0 - r) < 1e-17 * sum) break;
    }
    return lp + std::log(sum);
  }

  // log P(X >= R), same early exit.
  double log_upper_tail(std::size_t R, double best) const {
    const double lp = log_pmf(R);
    if (lp >= best) return lp;
    const double target = std::exp(best - lp);
    double sum = 1.0, t = 1.0;
    for (std::size_t k = R; k < S; ++k) {
      const double r = static_cast<double>(S - k) * z /
                       (static_cast<double>(k + 1) * (1.0 - z));
      t *= r;
      sum += t;
      if (sum >= target) break;
      if (r < 1.0 && t * r / (1.0 - r) < 1e-17 * sum) break;
    }
    return lp + std::log(sum);
  }
};

double log_gamma_from_cumulative(std::span<const std::size_t> R, std::size_t S,
                                 int M) {
  const auto& lf = log_factorials(S);
  const GridLogs& g = grid_logs(M);
  double best = -kLog2;  // statistic is clamped to 1
  const double Sd = static_cast<double>(S);
  int j = 1;
  while (j <= M) {
    // Run of equal R over j = a..b: the lower tail is smallest at the largest
    // z, the upper tail at the smallest.
    const int a = j;
    while (j < M && R[j + 1] == R[a]) ++j;
    const int b = j;
    ++j;
    const std::size_t r = R[a];
    if (static_cast<double>(r) <= std::ceil(Sd * g.z[b]) - 1.0) {
      const Binom bin{S, g.z[b], g.log_z[b], g.log_1mz[b], lf};
      best = std::min(best, bin.log_lower_tail(r, best));
    }
    if (static_cast<double>(r) > std::floor(Sd * g.z[a])) {
      const Binom bin{S, g.z[a], g.log_z[a], g.log_1mz[a], lf};
      best = std::min(best, bin.log_upper_tail(r, best));
    }
  }
  return std::min(0.0, kLog2 + best);
}

double log_gamma_counts(std::span<const std::size_t> counts) {
  if (counts.size() < 2) throw Error("need M >= 1");
  const int M = static_cast<int>(counts.size()) - 1;
  std::vector<std::size_t> R(M + 1, 0);
  std::size_t acc = 0;
  for (int jj = 1; jj <= M; ++jj) {
    acc += counts[jj - 1];
    R[jj] = acc;
  }
  const std::size_t S = acc + counts[M];
  if (S < 2) throw Error("need at least 2 ranks");
  return log_gamma_from_cumulative(R, S, M);
}

std::vector<std::size_t> histogram(std::span<const int> ranks, int M) {
  if (M < 1) throw Error("need M >= 1");
  std::vector<std::size_t> counts(M + 1, 0);
  for (int r : ranks) {
    if (r < 0 || r > M)
      throw Error("rank " + std::to_string(r) + " outside [0, " +
                  std::to_string(M) + "]");
    ++counts[r];
  }
  return counts;
}

// Uniform integer on {0..M} by multiply-shift; the bias is below 2^-50.
inline int draw_rank(Rng& rng, int M) {
  const unsigned __int128 x =
      static_cast<unsigned __int128>(rng()) * static_cast<unsigned>(M + 1);
  return static_cast<int>(x >> 64);
}

// Null replicate b always uses the rank stream derive_stream(seed, b + 1, M),
// and the table for S uses its first S ranks. Tables for several S can then
// be filled in one pass and agree exactly with one-at-a-time computation.
using NullKey = std::tuple<std::size_t, int, std::size_t, std::uint64_t>;

std::mutex null_mutex;
std::map<NullKey, std::shared_ptr<const std::vector<double>>> null_cache;

std::shared_ptr<const std::vector<double>> cached_null(const NullKey& key) {
  std::lock_guard<std::mutex> lock(null_mutex);
  const auto it = null_cache.find(key);
  return it == null_cache.end() ? nullptr : it->second;
}

void fill_null_tables(std::vector<std::size_t> sizes, int M, std::size_t n_mc,
                      std::uint64_t seed) {
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  std::erase_if(sizes, [&](std::size_t S) { return cached_null({S, M, n_mc, seed}) != nullptr; });
  if (sizes.empty()) return;
  std::vector<std::vector<double>> values(sizes.size(), std::vector<double>(n_mc));
  std::vector<std::size_t> counts(M + 1);
  for (std::size_t b = 0; b < n_mc; ++b) {
    Rng rng = derive_stream(seed, b + 1, static_cast<std::uint64_t>(M));
    std::fill(counts.begin(), counts.end(), 0);
    std::size_t drawn = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      for (; drawn < sizes[k]; ++drawn) ++counts[draw_rank(rng, M)];
      values[k][b] = log_gamma_counts(counts);
    }
  }
  std::lock_guard<std::mutex> lock(null_mutex);
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    std::sort(values[k].begin(), values[k].end());
    null_cache.emplace(NullKey{sizes[k], M, n_mc, seed},
                       std::make_shared<const std::vector<double>>(std::move(values[k])));
  }
}

void validate_null_args(std::size_t S, int M, double alpha, std::size_t n_mc) {
  if (S < 2) throw Error("need at least 2 ranks");
  if (M < 1) throw Error("need M >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("alpha must be in (0, 1]");
  if (n_mc < 1000) throw Error("need at least 1000 Monte-Carlo replicates");
}

double sensitivity_from_log_gamma(std::size_t S, double log_gamma) {
  const auto& lf = log_factorials(S);
  const double Sd = static_cast<double>(S);
  // log P(X >= R) at z = 1/2, accumulated from the top.
  double log_tail = -INFINITY;
  std::size_t found = S + 1;
  for (std::size_t k = S; k > S / 2; --k) {
    const double lp = lf[S] - lf[k] - lf[S - k] - Sd * kLog2;
    log_tail = std::max(log_tail, lp) +
               std::log1p(std::exp(-std::abs(log_tail - lp)));
    if (kLog2 + log_tail < log_gamma)
      found = k;
    else
      break;
  }
  if (found > S) return 0.5;
  return static_cast<double>(found) / Sd - 0.5;
}

}  // namespace

double log_gamma_statistic_from_counts(std::span<const std::size_t> counts) {
  return log_gamma_counts(counts);
}

double log_gamma_statistic(std::span<const int> ranks, int M) {
  if (ranks.size() < 2) throw Error("need at least 2 ranks");
  const auto counts = histogram(ranks, M);
  return log_gamma_counts(counts);
}

double gamma_statistic(std::span<const int> ranks, int M) {
  return std::exp(log_gamma_statistic(ranks, M));
}

void precompute_gamma_null(std::span<const std::size_t> sizes, int M,
                           std::size_t n_mc, std::uint64_t seed) {
  std::vector<std::size_t> wanted;
  for (std::size_t S : sizes) {
    if (S < 2) continue;
    validate_null_args(S, M, 0.5, n_mc);
    wanted.push_back(S);
  }
  fill_null_tables(std::move(wanted), M, n_mc, seed);
}

GammaNullTable gamma_null_quantile(std::size_t S, int M, double alpha,
                                   std::size_t n_mc, std::uint64_t seed) {
  validate_null_args(S, M, alpha, n_mc);
  const NullKey key{S, M, n_mc, seed};
  auto values = cached_null(key);
  if (!values) {
    fill_null_tables({S}, M, n_mc, seed);
    values = cached_null(key);
  }
  const auto pos = static_cast<std::size_t>(
      std::max(0.0, std::ceil(alpha * static_cast<double>(n_mc)) - 1.0));
  GammaNullTable t;
  t.S = S;
  t.M = M;
  t.alpha = alpha;
  t.n_mc = n_mc;
  t.seed = seed;
  t.log_quantile = (*values)[std::min(pos, n_mc - 1)];
  t.quantile = std::exp(t.log_quantile);
  return t;
}

double log_gamma_ratio(std::span<const int> ranks, int M,
                       const GammaNullTable& table) {
  if (ranks.size() != table.S || M != table.M)
    throw Error("null table built for S=" + std::to_string(table.S) +
                ", M=" + std::to_string(table.M) + " but got S=" +
                std::to_string(ranks.size()) + ", M=" + std::to_string(M));
  return log_gamma_statistic(ranks, M) - table.log_quantile;
}

CheckReport sbc_check(const std::string& quantity, std::span<const int> ranks,
                      int M, double alpha, std::size_t n_mc,
                      std::uint64_t seed) {
  const GammaNullTable table = gamma_null_quantile(ranks.size(), M, alpha, n_mc, seed);
  const double lg = log_gamma_statistic(ranks, M);
  CheckReport r;
  r.check_name = "sbc:" + quantity;
  r.statistic = lg - table.log_quantile;
  r.threshold_or_pvalue = 0.0;
  r.decision = r.statistic < 0.0 ? Decision::reject : Decision::pass;
  r.n_sims_used = ranks.size();
  r.extras["gamma"] = std::exp(lg);
  r.extras["log_gamma"] = lg;
  r.extras["null_quantile"] = table.quantile;
  r.extras["sensitivity"] = sensitivity_from_log_gamma(ranks.size(), table.log_quantile);
  return r;
}

double sbc_sensitivity(std::size_t S, double alpha, int M, std::size_t n_mc,
                       std::uint64_t seed) {
  if (S < 2) throw Error("need at least 2 simulations");
  const GammaNullTable table = gamma_null_quantile(S, M, alpha, n_mc, seed);
  return sensitivity_from_log_gamma(S, table.log_quantile);
}

EcdfBand gamma_band_at(std::size_t S, double z, double log_gamma_threshold) {
  if (S < 1) throw Error("need at least 1 rank");
  if (!(z > 0.0 && z < 1.0)) throw Error("z must lie in (0, 1)");
  const auto& lf = log_factorials(S);
  const double lz = std::log(z), l1z = std::log1p(-z);
  std::vector<double> lp(S + 1);
  for (std::size_t k = 0; k <= S; ++k)
    lp[k] = lf[S] - lf[k] - lf[S - k] + static_cast<double>(k) * lz +
            static_cast<double>(S - k) * l1z;
  auto log_add = [](double a, double b) {
    if (a == -INFINITY) return b;
    return std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
  };
  // Smallest R with 2 F(R) >= threshold.
  std::size_t lo = 0;
  double acc = -INFINITY;
  for (std::size_t k = 0; k <= S; ++k) {
    acc = log_add(acc, lp[k]);
    if (kLog2 + acc >= log_gamma_threshold) {
      lo = k;
      break;
    }
  }
  // Largest R with 2 P(X >= R) >= threshold.
  std::size_t hi = S;
  acc = -INFINITY;
  for (std::size_t k = S + 1; k-- > 0;) {
    acc = log_add(acc, lp[k]);
    if (kLog2 + acc >= log_gamma_threshold) {
      hi = k;
      break;
    }
  }
  const double Sd = static_cast<double>(S);
  return {z, static_cast<double>(lo) / Sd, static_cast<double>(hi) / Sd};
}

}  // namespace bfcheck
