#include "bfcheck/stats/dap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <tuple>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "bfcheck/error.hpp"
#include "bfcheck/rng.hpp"

namespace bfcheck {
namespace {

struct Moments {
  double n, mean, var;
};

Moments moments(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {n, mean, ss / (n - 1.0)};
}

bool all_identical(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs[0]; });
}

double two_sided_p(double t, double df) {
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

double t_quantile(double p, double df) {
  return boost::math::quantile(boost::math::students_t(df), p);
}

}  // namespace

CheckReport dap_t_test(std::span<const double> probs, double prior_m1,
                       double alpha) {
  if (probs.size() < 2) throw Error("t-test needs at least 2 observations");
  if (all_identical(probs))
    throw DegenerateInputError(
        "all probabilities identical; the t-test is undefined, use the Gaffke test");
  const Moments m = moments(probs);
  const double se = std::sqrt(m.var / m.n);
  const double df = m.n - 1.0;
  const double diff = m.mean - prior_m1;
  const double t = diff / se;
  const double half = t_quantile(0.975, df) * se;

  CheckReport r;
  r.check_name = "dap";
  r.statistic = t;
  r.threshold_or_pvalue = two_sided_p(t, df);
  r.decision = r.threshold_or_pvalue < alpha ? Decision::reject : Decision::pass;
  r.n_sims_used = probs.size();
  r.extras["mean"] = m.mean;
  r.extras["diff"] = diff;
  r.extras["ci_low"] = diff - half;
  r.extras["ci_high"] = diff + half;
  r.extras["df"] = df;
  return r;
}

CheckReport dap_welch(std::span<const double> probs,
                      std::span<const int> indicators, double alpha) {
  if (probs.size() < 2 || indicators.size() < 2)
    throw Error("Welch test needs at least 2 observations per sample");
  std::vector<double> ind(indicators.begin(), indicators.end());
  const Moments a = moments(probs);
  const Moments b = moments(ind);
  const double va = a.var / a.n, vb = b.var / b.n;
  if (va + vb == 0.0)
    throw DegenerateInputError("both samples are constant; the Welch test is undefined");
  const double se = std::sqrt(va + vb);
  const double df = (va + vb) * (va + vb) /
                    (va * va / (a.n - 1.0) + vb * vb / (b.n - 1.0));
  const double diff = a.mean - b.mean;
  const double t = diff / se;
  const double half = t_quantile(0.975, df) * se;

  CheckReport r;
  r.check_name = "dap-welch";
  r.statistic = t;
  r.threshold_or_pvalue = two_sided_p(t, df);
  r.decision = r.threshold_or_pvalue < alpha ? Decision::reject : Decision::pass;
  r.n_sims_used = probs.size();
  r.extras["mean"] = a.mean;
  r.extras["mean_indicator"] = b.mean;
  r.extras["diff"] = diff;
  r.extras["ci_low"] = diff - half;
  r.extras["ci_high"] = diff + half;
  r.extras["df"] = df;
  return r;
}

// ---------------------------------------------------------------------------
// Gaffke
// ---------------------------------------------------------------------------

namespace {

// n_mc rows of Dirichlet(1, ..., 1) weights over n + 1 points, row-major.
std::shared_ptr<const std::vector<double>> dirichlet_weights(
    std::size_t n, std::size_t n_mc, std::uint64_t seed) {
  using Key = std::tuple<std::size_t, std::size_t, std::uint64_t>;
  static std::mutex mu;
  static std::map<Key, std::shared_ptr<const std::vector<double>>> cache;
  const Key key{n, n_mc, seed};
  {
    std::lock_guard<std::mutex> lock(mu);
    if (const auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto w = std::make_shared<std::vector<double>>(n_mc * (n + 1));
  Rng rng = derive_stream(seed, n, 0x6761666b);
  for (std::size_t b = 0; b < n_mc; ++b) {
    double* row = w->data() + b * (n + 1);
    double total = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      row[i] = -std::log1p(-uniform01(rng));
      total += row[i];
    }
    for (std::size_t i = 0; i <= n; ++i) row[i] /= total;
  }
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(w)).first->second;
}

double empirical_quantile(std::vector<double> v, double p) {
  const auto k = static_cast<std::size_t>(
      std::clamp(std::ceil(p * static_cast<double>(v.size())) - 1.0, 0.0,
                 static_cast<double>(v.size() - 1)));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

}  // namespace

CheckReport gaffke_test(std::span<const double> xs, double mu0,
                        std::size_t n_mc, std::uint64_t seed, double alpha) {
  const std::size_t n = xs.size();
  if (n < 2) throw Error("Gaffke test needs at least 2 observations");
  for (double x : xs)
    if (!(x >= 0.0 && x <= 1.0)) throw Error("Gaffke test needs values in [0, 1]");
  if (n_mc < 100) throw Error("need at least 100 Monte-Carlo replicates");
  const auto weights = dirichlet_weights(n, n_mc, seed);

  // Upper functional puts the extra weight on 1, the lower one on 0.
  std::vector<double> upper(n_mc), lower(n_mc);
  std::size_t up_ge = 0, low_le = 0;
  for (std::size_t b = 0; b < n_mc; ++b) {
    const double* row = weights->data() + b * (n + 1);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += row[i] * xs[i];
    lower[b] = s;
    upper[b] = s + row[n];
    if (upper[b] >= mu0) ++up_ge;
    if (lower[b] <= mu0) ++low_le;
  }
  const double p_up = static_cast<double>(up_ge) / static_cast<double>(n_mc);
  const double p_low = static_cast<double>(low_le) / static_cast<double>(n_mc);

  CheckReport r;
  r.check_name = "gaffke";
  r.statistic = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  r.threshold_or_pvalue = std::min(1.0, 2.0 * std::min(p_up, p_low));
  r.decision = r.threshold_or_pvalue < alpha ? Decision::reject : Decision::pass;
  r.n_sims_used = n;
  r.extras["p_upper"] = p_up;
  r.extras["p_lower"] = p_low;
  r.extras["ci_low"] = empirical_quantile(lower, alpha / 2.0);
  r.extras["ci_high"] = empirical_quantile(upper, 1.0 - alpha / 2.0);
  return r;
}

// ---------------------------------------------------------------------------
// JZS Bayes factor
// ---------------------------------------------------------------------------

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;

struct JzsIntegrand {
  double t2, n, nu, r;
  double log_null;  // (nu + 1) / 2 * log(1 + t^2 / nu)

  // Log of the integrand after g = u / (1 - u), including dg/du.
  double log_at(double u) const {
    if (u <= 0.0) return -INFINITY;
    if (u >= 1.0) return std::log(r) - 0.5 * kLog2Pi - 0.5 * std::log(n) + log_null;
    const double g = u / (1.0 - u);
    return std::log(r) - 0.5 * kLog2Pi - 1.5 * std::log(g) - r * r / (2.0 * g) -
           0.5 * std::log1p(n * g) -
           0.5 * (nu + 1.0) * std::log1p(t2 / ((1.0 + n * g) * nu)) + log_null +
           2.0 * std::log1p(g);
  }
};

template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm,
                        double fb, double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

}  // namespace

double jzs_log_bf_from_t(double t, std::size_t n, double r_scale) {
  if (n < 2) throw Error("JZS t-test needs at least 2 observations");
  if (!(r_scale > 0.0)) throw Error("JZS scale must be positive");
  if (!std::isfinite(t)) throw Error("t statistic must be finite");
  const double nd = static_cast<double>(n), nu = nd - 1.0;
  const JzsIntegrand g{t * t, nd, nu, r_scale,
                       0.5 * (nu + 1.0) * std::log1p(t * t / nu)};

  constexpr int kGrid = 200;
  std::vector<double> logs(2 * kGrid + 1);
  double shift = -INFINITY;
  for (int k = 0; k <= 2 * kGrid; ++k) {
    logs[k] = g.log_at(static_cast<double>(k) / (2 * kGrid));
    shift = std::max(shift, logs[k]);
  }
  auto f = [&](double u) { return std::exp(g.log_at(u) - shift); };
  const double h = 1.0 / kGrid;
  double coarse = 0.0;
  for (int k = 0; k < kGrid; ++k)
    coarse += h / 6.0 *
              (std::exp(logs[2 * k] - shift) + 4.0 * std::exp(logs[2 * k + 1] - shift) +
               std::exp(logs[2 * k + 2] - shift));
  const double eps = 1e-8 * coarse / kGrid;
  double total = 0.0;
  for (int k = 0; k < kGrid; ++k) {
    const double a = k * h, b = (k + 1) * h;
    const double fa = std::exp(logs[2 * k] - shift);
    const double fm = std::exp(logs[2 * k + 1] - shift);
    const double fb = std::exp(logs[2 * k + 2] - shift);
    const double whole = h / 6.0 * (fa + 4.0 * fm + fb);
    total += adaptive_simpson(f, a, b, fa, fm, fb, whole, eps, 40);
  }
  return shift + std::log(total);
}

double jzs_ttest_log_bf(std::span<const double> xs, double r_scale, double mu0) {
  if (xs.size() < 2) throw Error("JZS t-test needs at least 2 observations");
  if (all_identical(xs))
    throw DegenerateInputError("zero sample variance; the JZS t-test is undefined");
  const Moments m = moments(xs);
  const double t = (m.mean - mu0) / std::sqrt(m.var / m.n);
  return jzs_log_bf_from_t(t, xs.size(), r_scale);
}

CheckReport dap_jzs(std::span<const double> probs, double prior_m1,
                    double r_scale, double reject_bf) {
  const double lbf = jzs_ttest_log_bf(probs, r_scale, prior_m1);
  CheckReport r;
  r.check_name = "dap-jzs";
  r.statistic = lbf;
  r.threshold_or_pvalue = std::log(reject_bf);
  r.decision = lbf > r.threshold_or_pvalue ? Decision::reject : Decision::pass;
  r.n_sims_used = probs.size();
  r.extras["bf10"] = std::exp(lbf);
  r.extras["r_scale"] = r_scale;
  return r;
}

}  // namespace bfcheck
