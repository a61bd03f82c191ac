#include "bfcheck/stats/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "bfcheck/error.hpp"
#include "bfcheck/rng.hpp"

namespace bfcheck {
namespace {

// Observations grouped by distinct probability, in increasing order.
struct Groups {
  std::vector<double> q;
  std::vector<double> count;
  std::vector<double> ones;
  std::vector<std::size_t> group_of;  // per observation
  double n = 0.0;
};

Groups make_groups(std::span<const double> probs, std::span<const int> outcomes) {
  if (probs.size() != outcomes.size())
    throw Error("probs and outcomes differ in length");
  if (probs.empty()) throw Error("need at least one observation");
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0))
      throw Error("probabilities must lie in [0, 1]");
    if (outcomes[i] != 0 && outcomes[i] != 1)
      throw Error("outcomes must be 0 or 1");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
  Groups g;
  g.group_of.resize(probs.size());
  for (std::size_t idx : order) {
    if (g.q.empty() || probs[idx] != g.q.back()) {
      g.q.push_back(probs[idx]);
      g.count.push_back(0.0);
      g.ones.push_back(0.0);
    }
    g.count.back() += 1.0;
    g.ones.back() += outcomes[idx];
    g.group_of[idx] = g.q.size() - 1;
  }
  g.n = static_cast<double>(probs.size());
  return g;
}

struct Block {
  double w, y;
  std::size_t first, last;  // group range
};

// Pool adjacent violators over groups with weights w and outcome sums y.
void pav_blocks(std::span<const double> w, std::span<const double> y,
                std::vector<Block>& stack) {
  stack.clear();
  for (std::size_t gi = 0; gi < w.size(); ++gi) {
    stack.push_back({w[gi], y[gi], gi, gi});
    while (stack.size() >= 2) {
      const Block& top = stack.back();
      const Block& prev = stack[stack.size() - 2];
      if (prev.y * top.w < top.y * prev.w) break;
      const Block merged{prev.w + top.w, prev.y + top.y, prev.first, top.last};
      stack.pop_back();
      stack.back() = merged;
    }
  }
}

double brier_sum(const Groups& g, std::span<const double> ones) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.q.size(); ++i) {
    const double q = g.q[i];
    s += ones[i] * (1.0 - q) * (1.0 - q) + (g.count[i] - ones[i]) * q * q;
  }
  return s;
}

double mcb_grouped(const Groups& g, std::span<const double> ones,
                   std::vector<Block>& stack) {
  pav_blocks(g.count, ones, stack);
  double recal = 0.0;
  for (const Block& b : stack) recal += b.y - b.y * b.y / b.w;
  return std::max(0.0, (brier_sum(g, ones) - recal) / g.n);
}

// Bootstrap replicate when every group is a single observation: outcome bits
// are drawn as rng() < threshold. Blocks hold integer weights and sums.
// Bootstrap replicates of the MCB. Outcome bits are rng() < q 2^64 from a
// splitmix64 sequence seeded once per replicate; groups larger than
// kBitsLimit draw a binomial instead of summing bits. Blocks hold integer
// weights and sums.
class GroupBootstrap {
 public:
  static constexpr std::int32_t kBitsLimit = 32;

  explicit GroupBootstrap(const Groups& g) : n_(g.n) {
    const std::size_t k = g.q.size();
    threshold_.resize(k);
    count_.resize(k);
    lin_.resize(k);
    binom_.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double q = g.q[i];
      threshold_[i] = q >= 1.0 ? ~0ULL : static_cast<std::uint64_t>(std::ldexp(q, 64));
      count_[i] = static_cast<std::int32_t>(g.count[i]);
      // Brier of the group: c q^2 + y (1 - 2 q) with y ones.
      lin_[i] = 1.0 - 2.0 * q;
      base_ += g.count[i] * q * q;
      if (count_[i] > kBitsLimit) binom_[i].emplace(count_[i], q);
    }
    bw_.resize(k);
    by_.resize(k);
  }

  double draw_mcb(Rng& rng) {
    const std::size_t len = threshold_.size();
    double brier = base_;
    std::size_t top = 0;
    std::uint64_t state = rng();
    auto bit = [&](std::size_t i) {
      const std::uint64_t u = splitmix64(state);
      state += 0x9E3779B97F4A7C15ULL;
      return threshold_[i] == ~0ULL || u < threshold_[i];
    };
    for (std::size_t i = 0; i < len; ++i) {
      std::int32_t w = count_[i], y = 0;
      if (w == 1) {
        y = bit(i) ? 1 : 0;
      } else if (binom_[i]) {
        y = (*binom_[i])(rng);
      } else {
        for (std::int32_t c = 0; c < w; ++c) y += bit(i) ? 1 : 0;
      }
      brier += static_cast<double>(y) * lin_[i];
      while (top > 0 && static_cast<std::int64_t>(by_[top - 1]) * w >=
                            static_cast<std::int64_t>(y) * bw_[top - 1]) {
        --top;
        w += bw_[top];
        y += by_[top];
      }
      bw_[top] = w;
      by_[top] = y;
      ++top;
    }
    double recal = 0.0;
    for (std::size_t k = 0; k < top; ++k) {
      const double y = by_[k];
      recal += y - y * y / bw_[k];
    }
    return std::max(0.0, (brier - recal) / n_);
  }

 private:
  double n_;
  double base_ = 0.0;
  std::vector<std::uint64_t> threshold_;
  std::vector<std::int32_t> count_;
  std::vector<double> lin_;
  std::vector<std::optional<std::binomial_distribution<std::int32_t>>> binom_;
  std::vector<std::int32_t> bw_, by_;
};

}  // namespace

std::vector<double> pav_recalibrate(std::span<const double> probs,
                                    std::span<const int> outcomes) {
  const Groups g = make_groups(probs, outcomes);
  std::vector<Block> stack;
  pav_blocks(g.count, g.ones, stack);
  std::vector<double> fitted_group(g.q.size());
  for (const Block& b : stack)
    for (std::size_t gi = b.first; gi <= b.last; ++gi) fitted_group[gi] = b.y / b.w;
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = fitted_group[g.group_of[i]];
  return out;
}

double miscalibration_mcb(std::span<const double> probs,
                          std::span<const int> outcomes) {
  const Groups g = make_groups(probs, outcomes);
  std::vector<Block> stack;
  return mcb_grouped(g, g.ones, stack);
}

CheckReport miscalibration_test(std::span<const double> probs,
                                std::span<const int> outcomes, std::size_t B,
                                std::uint64_t seed, double alpha,
                                bool stop_when_decided) {
  if (B < 100) throw Error("need at least 100 bootstrap replicates");
  const Groups g = make_groups(probs, outcomes);
  std::vector<Block> stack;
  const double obs = mcb_grouped(g, g.ones, stack);

  Rng rng = derive_stream(seed, probs.size(), 0x6d6362);
  GroupBootstrap boot(g);
  std::vector<double> null;
  null.reserve(B);
  std::size_t exceed = 0;
  // Ties between the observed and resampled MCB are decided up to rounding.
  const double tol = 1e-12 * std::max(1.0, obs);
  // With this many exceedances the test cannot reject whatever follows.
  const double decided = alpha * static_cast<double>(B + 1) - 1.0;
  for (std::size_t b = 0; b < B; ++b) {
    null.push_back(boot.draw_mcb(rng));
    if (null.back() >= obs - tol) ++exceed;
    if (stop_when_decided && static_cast<double>(exceed) >= decided) break;
  }
  const std::size_t used = null.size();
  std::sort(null.begin(), null.end());
  const auto q95 = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(used))) - 1;

  CheckReport r;
  r.check_name = "miscalibration";
  r.statistic = obs;
  r.threshold_or_pvalue = static_cast<double>(1 + exceed) / static_cast<double>(used + 1);
  r.decision = r.threshold_or_pvalue < alpha ? Decision::reject : Decision::pass;
  r.n_sims_used = probs.size();
  r.extras["mcb"] = obs;
  r.extras["q95"] = null[q95];
  r.extras["p_floor"] = exceed == 0 ? 1.0 : 0.0;
  r.extras["bootstrap"] = static_cast<double>(used);
  return r;
}

std::vector<ReliabilityPoint> reliability_curve(std::span<const double> probs,
                                                std::span<const int> outcomes) {
  const Groups g = make_groups(probs, outcomes);
  std::vector<Block> stack;
  pav_blocks(g.count, g.ones, stack);
  std::vector<ReliabilityPoint> out;
  out.reserve(stack.size());
  for (const Block& b : stack)
    out.push_back({g.q[b.first], g.q[b.last], b.y / b.w,
                   static_cast<std::size_t>(b.w)});
  return out;
}

}  // namespace bfcheck
