#pragma once

#include <cmath>

namespace bfcheck {

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double inv_logit(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// A probability held as its log-odds.
///
/// Posterior model probabilities are routinely within 1e-13 of 0 or 1 where a
/// plain double can no longer be mapped back to the log-odds it came from.
/// Keeping the log-odds as the representation makes logit(inv_logit(x)) exact.
class Probability {
 public:
  constexpr Probability() = default;

  static Probability from_value(double p) { return Probability(logit(p)); }
  static constexpr Probability from_log_odds(double l) { return Probability(l); }

  double value() const { return inv_logit(log_odds_); }
  constexpr double log_odds() const { return log_odds_; }
  /// 1 - value(), without cancellation.
  double complement() const { return inv_logit(-log_odds_); }

  friend constexpr bool operator==(Probability, Probability) = default;

 private:
  constexpr explicit Probability(double l) : log_odds_(l) {}
  double log_odds_ = 0.0;
};

inline double logit(Probability p) { return p.log_odds(); }

}  // namespace bfcheck
