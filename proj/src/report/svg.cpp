#include "bfcheck/report/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "bfcheck/error.hpp"
#include "bfcheck/rng.hpp"
#include "bfcheck/stats/calibration.hpp"
#include "bfcheck/stats/gamma.hpp"

namespace bfcheck::report {
namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 64, kRight = 16, kTop = 32, kBottom = 48;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Data-to-pixel mapping plus the shared frame.
class Canvas {
 public:
  Canvas(double x0, double x1, double y0, double y1) : x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
    if (!(x1_ > x0_)) x1_ = x0_ + 1.0;
    if (!(y1_ > y0_)) {
      y0_ -= 0.5;
      y1_ += 0.5;
    }
  }

  double px(double x) const { return kLeft + (x - x0_) / (x1_ - x0_) * (kWidth - kLeft - kRight); }
  double py(double y) const {
    return kHeight - kBottom - (y - y0_) / (y1_ - y0_) * (kHeight - kTop - kBottom);
  }

  std::string polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                       const std::string& attrs) const {
    std::string pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += fmt(px(xs[i])) + "," + fmt(py(std::clamp(ys[i], y0_, y1_)));
    }
    if (pts.empty()) return "";
    return "<polyline fill=\"none\" " + attrs + " points=\"" + pts + "\"/>\n";
  }

  std::string hline(double y, const std::string& attrs) const {
    return "<line x1=\"" + fmt(px(x0_)) + "\" y1=\"" + fmt(py(y)) + "\" x2=\"" + fmt(px(x1_)) +
           "\" y2=\"" + fmt(py(y)) + "\" " + attrs + "/>\n";
  }

  std::string vline(double x, const std::string& attrs) const {
    return "<line x1=\"" + fmt(px(x)) + "\" y1=\"" + fmt(py(y0_)) + "\" x2=\"" + fmt(px(x)) +
           "\" y2=\"" + fmt(py(y1_)) + "\" " + attrs + "/>\n";
  }

  std::string open(const std::string& title, const std::string& xlab,
                   const std::string& ylab) const {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << escape(title) << "</text>\n"
      << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight
      << "\" height=\"" << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"#444\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(xlab)
      << "</text>\n"
      << "<text x=\"14\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 14 " << kHeight / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(ylab)
      << "</text>\n";
    // Axis ticks at both ends.
    for (double x : {x0_, x1_})
      s << "<text x=\"" << fmt(px(x)) << "\" y=\"" << kHeight - kBottom + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << tick(x)
        << "</text>\n";
    for (double y : {y0_, y1_})
      s << "<text x=\"" << kLeft - 4 << "\" y=\"" << fmt(py(y) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << tick(y)
        << "</text>\n";
    return s.str();
  }

 private:
  static std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }

  double x0_, x1_, y0_, y1_;
};

}  // namespace

std::vector<EcdfDiffPoint> ecdf_diff_data(std::span<const int> ranks, int M,
                                          double log_gamma_threshold) {
  if (ranks.empty()) throw Error("need at least one rank");
  std::vector<std::size_t> counts(static_cast<std::size_t>(M) + 1, 0);
  for (int r : ranks) {
    if (r < 0 || r > M) throw Error("rank outside [0, M]");
    ++counts[static_cast<std::size_t>(r)];
  }
  const double S = static_cast<double>(ranks.size());
  std::vector<EcdfDiffPoint> out;
  out.reserve(static_cast<std::size_t>(M));
  std::size_t below = 0;
  for (int j = 1; j <= M; ++j) {
    below += counts[static_cast<std::size_t>(j - 1)];
    const double z = static_cast<double>(j) / (M + 1.0);
    const EcdfBand band = gamma_band_at(ranks.size(), z, log_gamma_threshold);
    out.push_back({z, static_cast<double>(below) / S - z, band.lower - z, band.upper - z});
  }
  return out;
}

std::string plot_ecdf_diff(std::span<const int> ranks, int M, double log_gamma_threshold,
                           const std::string& title) {
  if (ranks.size() < 10) throw Error("ECDF plot needs at least 10 ranks");
  auto pts = ecdf_diff_data(ranks, M, log_gamma_threshold);
  // Thin to at most ~400 points; ECDF steps are finer than a pixel anyway.
  const std::size_t stride = std::max<std::size_t>(1, pts.size() / 400);
  std::vector<double> z, d, lo, hi;
  double ymin = 0, ymax = 0;
  for (std::size_t i = 0; i < pts.size(); i += stride) {
    z.push_back(pts[i].z);
    d.push_back(pts[i].diff);
    lo.push_back(pts[i].lower);
    hi.push_back(pts[i].upper);
    ymin = std::min({ymin, pts[i].diff, pts[i].lower});
    ymax = std::max({ymax, pts[i].diff, pts[i].upper});
  }
  const double pad = 0.05 * (ymax - ymin + 1e-9);
  const Canvas c(0.0, 1.0, ymin - pad, ymax + pad);
  std::string s = c.open(title, "fractional rank", "ECDF difference");
  s += c.hline(0.0, "stroke=\"#888\" stroke-dasharray=\"4 3\"");
  s += c.polyline(z, lo, "stroke=\"#3b6fb6\" stroke-width=\"1\"");
  s += c.polyline(z, hi, "stroke=\"#3b6fb6\" stroke-width=\"1\"");
  s += c.polyline(z, d, "stroke=\"black\" stroke-width=\"1.5\"");
  s += "</svg>\n";
  return s;
}

// ---------------------------------------------------------------------------

namespace {

double step_value(const std::vector<ReliabilityPoint>& pts, double x) {
  // Blocks are ordered; the fit is constant from one block's low end to the
  // next block's low end.
  double v = pts.front().fitted;
  for (const auto& p : pts) {
    if (p.prob_low > x) break;
    v = p.fitted;
  }
  return v;
}

}  // namespace

CalibrationBand calibration_band(std::span<const double> probs, std::size_t B,
                                 std::uint64_t seed, std::size_t grid) {
  if (probs.empty()) throw Error("need at least one probability");
  if (grid < 2) throw Error("grid needs at least 2 points");
  const auto [mn, mx] = std::minmax_element(probs.begin(), probs.end());
  CalibrationBand band;
  for (std::size_t i = 0; i < grid; ++i)
    band.x.push_back(*mn + (*mx - *mn) * static_cast<double>(i) / static_cast<double>(grid - 1));
  std::vector<std::vector<double>> at(grid, std::vector<double>(B));
  Rng rng = derive_stream(seed, probs.size(), 0x63616c62);
  std::vector<int> y(probs.size());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < probs.size(); ++i) y[i] = bernoulli(rng, probs[i]) ? 1 : 0;
    const auto pts = reliability_curve(probs, y);
    for (std::size_t g = 0; g < grid; ++g) at[g][b] = step_value(pts, band.x[g]);
  }
  for (auto& v : at) {
    std::sort(v.begin(), v.end());
    const auto q = [&](double p) {
      const auto k = static_cast<std::size_t>(std::floor(p * static_cast<double>(B - 1)));
      return v[k];
    };
    band.lower.push_back(B ? q(0.025) : 0.0);
    band.upper.push_back(B ? q(0.975) : 1.0);
  }
  return band;
}

std::string plot_calibration(std::span<const double> probs, std::span<const int> outcomes,
                             const std::string& title, std::size_t B, std::uint64_t seed) {
  if (probs.size() < 20) throw Error("calibration plot needs at least 20 pairs");
  const auto pts = reliability_curve(probs, outcomes);
  const Canvas c(0.0, 1.0, 0.0, 1.0);
  std::string s = c.open(title, "predicted probability", "recalibrated probability");
  s += c.polyline({0.0, 1.0}, {0.0, 1.0}, "stroke=\"#888\" stroke-dasharray=\"4 3\"");
  if (B > 0) {
    const auto band = calibration_band(probs, B, seed);
    s += c.polyline(band.x, band.lower, "stroke=\"#3b6fb6\" stroke-width=\"1\"");
    s += c.polyline(band.x, band.upper, "stroke=\"#3b6fb6\" stroke-width=\"1\"");
  }
  std::vector<double> xs, ys;
  for (const auto& p : pts) {
    xs.push_back(p.prob_low);
    ys.push_back(p.fitted);
    if (p.prob_high > p.prob_low) {
      xs.push_back(p.prob_high);
      ys.push_back(p.fitted);
    }
  }
  s += c.polyline(xs, ys, "stroke=\"black\" stroke-width=\"1.5\"");
  for (std::size_t i = 0; i < xs.size(); ++i)
    s += "<circle cx=\"" + fmt(c.px(xs[i])) + "\" cy=\"" + fmt(c.py(ys[i])) +
         "\" r=\"2\" fill=\"black\"/>\n";
  s += "</svg>\n";
  return s;
}

// ---------------------------------------------------------------------------

HistoryPlotStyle history_style(const std::string& check_name, double alpha) {
  if (check_name.rfind("sbc:", 0) == 0) return {0.0, false, "log gamma ratio"};
  return {std::log10(alpha), true, "log10 p-value"};
}

std::string plot_history(const HistoryCurve& curve, const HistoryPlotStyle& style,
                         std::optional<std::size_t> power_marker) {
  if (curve.grid.empty()) throw Error("history plot needs a non-empty grid");
  std::vector<double> xs(curve.grid.begin(), curve.grid.end());
  std::vector<std::vector<double>> lines;
  double ymin = style.threshold, ymax = style.threshold;
  for (const auto& row : curve.rows) {
    std::vector<double> ys(row.statistic);
    for (auto& y : ys) {
      if (style.log10_scale) y = std::log10(std::max(y, 1e-300));
      if (std::isfinite(y)) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
    lines.push_back(std::move(ys));
  }
  // Extremely small log ratios would flatten everything else.
  ymin = std::max(ymin, style.threshold - 50.0);
  const Canvas c(xs.front() == xs.back() ? 0.0 : xs.front(), xs.back(), ymin, ymax);
  std::string s = c.open(curve.check_name, "number of simulations", style.y_label);
  for (const auto& ys : lines)
    s += c.polyline(xs, ys, "stroke=\"black\" stroke-opacity=\"0.3\" stroke-width=\"1\"");
  s += c.hline(style.threshold, "stroke=\"#3b6fb6\" stroke-width=\"1.5\"");
  if (power_marker)
    s += c.vline(static_cast<double>(*power_marker),
                 "stroke=\"#e08a1e\" stroke-width=\"1.5\" class=\"power-marker\"");
  s += "</svg>\n";
  return s;
}

}  // namespace bfcheck::report
