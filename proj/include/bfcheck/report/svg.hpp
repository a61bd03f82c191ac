#pragma once

// Hand-written SVG line charts. Output depends only on the inputs.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bfcheck/history.hpp"

namespace bfcheck::report {

struct EcdfDiffPoint {
  double z = 0.0;
  double diff = 0.0;   // ECDF(z) - z
  double lower = 0.0;  // band, also as a difference from z
  double upper = 0.0;
};

/// ECDF difference of the ranks at z_j = j / (M + 1), j = 1..M, with the
/// band implied by the gamma threshold (log scale).
std::vector<EcdfDiffPoint> ecdf_diff_data(std::span<const int> ranks, int M,
                                          double log_gamma_threshold);
/// Requires at least 10 ranks.
std::string plot_ecdf_diff(std::span<const int> ranks, int M,
                           double log_gamma_threshold, const std::string& title);

struct CalibrationBand {
  std::vector<double> x;       // probability grid
  std::vector<double> lower;   // 2.5% of recalibrated curves under the null
  std::vector<double> upper;   // 97.5%
};

/// Pointwise band of the isotonic recalibration when outcomes are redrawn as
/// Bernoulli(probs).
CalibrationBand calibration_band(std::span<const double> probs, std::size_t B,
                                 std::uint64_t seed, std::size_t grid = 101);
/// Requires at least 20 pairs.
std::string plot_calibration(std::span<const double> probs, std::span<const int> outcomes,
                             const std::string& title, std::size_t B = 200,
                             std::uint64_t seed = 0);

/// How history statistics are drawn: log-ratio checks on their own scale,
/// p-value checks as log10 p.
struct HistoryPlotStyle {
  double threshold = 0.0;
  bool log10_scale = false;
  std::string y_label;
};
HistoryPlotStyle history_style(const std::string& check_name, double alpha = 0.05);

/// One line per history, the threshold as a horizontal rule and the first
/// 80%-power point as a vertical rule when attained. Requires a non-empty grid.
std::string plot_history(const HistoryCurve& curve, const HistoryPlotStyle& style,
                         std::optional<std::size_t> power_marker);

}  // namespace bfcheck::report
