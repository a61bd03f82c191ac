// Acceptance runs. Usage: acceptance <A1..A13 | all>
//
// Prints one PASS/FAIL line per criterion, followed by indented diagnostics.
// Exit status is 0 only when every requested criterion passes.

#include <boost/math/special_functions/beta.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bfcheck/cli.hpp"
#include "bfcheck/engine.hpp"
#include "bfcheck/error.hpp"
#include "bfcheck/faults.hpp"
#include "bfcheck/history.hpp"
#include "bfcheck/report/artifacts.hpp"
#include "bfcheck/rng.hpp"
#include "bfcheck/stats/calibration.hpp"
#include "bfcheck/stats/dap.hpp"
#include "bfcheck/stats/gamma.hpp"
#include "bfcheck/stats/good.hpp"
#include "bfcheck/zoo.hpp"

using namespace bfcheck;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kPoolSeed = 1;
constexpr std::uint64_t kHistorySeed = 7;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { notes.push_back("     " + what); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

BmaProblem scenario(const std::string& model, const std::string& fault = "") {
  return cli::build_scenario(model, fault, "");
}

RecordSet pool_for(const BmaProblem& p, std::size_t L) {
  EngineConfig ec;
  ec.n_sims = 10 * L;
  ec.master_seed = kPoolSeed;
  return run_sbc(p, ec);
}

std::map<std::string, HistoryCurve> histories(const RecordSet& pool,
                                              const std::vector<std::string>& checks,
                                              std::size_t L, std::size_t step = 0) {
  HistoryConfig hc;
  hc.history_length = L;
  hc.step = step;
  std::map<std::string, HistoryCurve> out;
  for (auto& c : run_histories(pool, checks, hc, kHistorySeed)) out[c.check_name] = std::move(c);
  return out;
}

// Rejection rates of a null check across the history grid. With 100
// histories and hundreds of correlated grid points, the sampled maximum of a
// correct 5% check routinely exceeds 10%, so a point counts as outside the
// band only when its exact binomial interval, Bonferroni-adjusted over the
// grid, lies entirely outside [lo, hi]. The mean rate over the grid must
// itself lie in [lo, hi].
void require_null_band(Outcome& o, const HistoryCurve& c, double lo = 0.01, double hi = 0.10) {
  const std::size_t G = c.grid.size();
  const double a = 0.05 / static_cast<double>(G);
  std::size_t flagged = 0, literal = 0, undefined = 0, defined = 0;
  double mn = 1.0, mx = 0.0, sum = 0.0;
  std::size_t at_mn = 0, at_mx = 0;
  for (std::size_t g = 0; g < G; ++g) {
    double k = 0, n = 0;
    for (const auto& row : c.rows) {
      if (std::isnan(row.reject[g])) continue;
      ++n;
      k += row.reject[g];
    }
    if (n == 0) {
      ++undefined;
      continue;
    }
    ++defined;
    const double rate = k / n;
    sum += rate;
    if (rate < mn) mn = rate, at_mn = c.grid[g];
    if (rate > mx) mx = rate, at_mx = c.grid[g];
    literal += rate < lo || rate > hi;
    const double cp_lo = k == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1, a / 2);
    const double cp_hi = k == n ? 1.0 : boost::math::ibeta_inv(k + 1, n - k, 1 - a / 2);
    flagged += cp_hi < lo || cp_lo > hi;
  }
  const double mean = defined ? sum / static_cast<double>(defined) : std::nan("");
  o.require(defined > 0 && flagged == 0 && mean >= lo && mean <= hi,
            fmt("%s null band [%.0f%%, %.0f%%]: mean %.3f, min %.2f@%zu, max %.2f@%zu, "
                "outside after exact/Bonferroni %zu of %zu, raw outside %zu, undefined %zu",
                c.check_name.c_str(), 100 * lo, 100 * hi, mean, mn, at_mn, mx, at_mx, flagged,
                defined, literal, undefined));
}

void require_power(Outcome& o, const HistoryCurve& c, std::size_t within) {
  const PowerCurve pc = power_curve(c);
  const bool ok = pc.first_80_power && *pc.first_80_power <= within;
  o.require(ok, fmt("%s reaches 80%% power within %zu: first at %s, final %.2f",
                    c.check_name.c_str(), within,
                    pc.first_80_power ? std::to_string(*pc.first_80_power).c_str() : "never",
                    pc.power.back()));
}

double power_at(const HistoryCurve& c, std::size_t n) {
  const PowerCurve pc = power_curve(c);
  for (std::size_t g = 0; g < pc.grid.size(); ++g)
    if (pc.grid[g] == n) return pc.power[g];
  return std::nan("");
}

void require_runtime(Outcome& o, const Stopwatch& sw, double limit_s) {
  o.require(sw.seconds() < limit_s, fmt("runtime %.1f s < %.0f s", sw.seconds(), limit_s));
}

// Family-wise decision of several checks at level alpha: each at alpha / k.
bool all_pass_bonferroni(const RecordSet& rs, bool prior_known, double alpha,
                         std::uint64_t seed, std::string* failed) {
  const std::size_t k = rs.quantity_names.size() + 2;
  const double a = alpha / static_cast<double>(k);
  const int M = static_cast<int>(rs.config.n_draws);
  std::vector<CheckReport> reports;
  for (const auto& q : rs.quantity_names) reports.push_back(sbc_check(q, rs.ranks(q), M, a));
  reports.push_back(miscalibration_test(rs.probs(), rs.true_indices(), 2000, seed, a));
  reports.push_back(prior_known ? dap_t_test(rs.probs(), rs.prior_m1, a)
                                : dap_welch(rs.probs(), rs.true_indices(), a));
  bool ok = true;
  for (const auto& r : reports)
    if (r.rejected()) {
      ok = false;
      if (failed) *failed += (failed->empty() ? "" : ",") + r.check_name;
    }
  return ok;
}

// ---------------------------------------------------------------------------

Outcome a1() {
  Stopwatch sw;
  Outcome o;
  const auto pool = pool_for(scenario("binary-toy"), 200);
  const auto h =
      histories(pool, {"sbc:model_index", "sbc:log_lik", "miscalibration", "dap"}, 200);
  for (const auto& [name, c] : h) require_null_band(o, c);
  require_runtime(o, sw, 120);
  return o;
}

Outcome a2() {
  Stopwatch sw;
  Outcome o;
  const auto pool = pool_for(scenario("binary-toy", "flip"), 200);
  const auto h = histories(pool, {"miscalibration", "sbc:model_index", "dap"}, 200);
  require_power(o, h.at("miscalibration"), 200);
  require_power(o, h.at("sbc:model_index"), 200);
  const double dap = power_at(h.at("dap"), 200);
  o.require(dap < 0.15, fmt("dap power at 200 = %.2f < 0.15", dap));
  require_runtime(o, sw, 120);
  return o;
}

Outcome a3() {
  Stopwatch sw;
  Outcome o;
  const auto pool = pool_for(scenario("poisson-nb", "constant"), 1000);
  // Constant probabilities leave the one-sample t statistic undefined; the
  // Welch form compares them with the simulated indices instead.
  const auto h = histories(
      pool, {"sbc:var_y", "sbc:log_lik", "sbc:model_index", "miscalibration", "dap-welch"}, 1000);
  require_power(o, h.at("sbc:var_y"), 1000);
  require_power(o, h.at("sbc:log_lik"), 1000);
  require_null_band(o, h.at("sbc:model_index"));
  require_null_band(o, h.at("miscalibration"));
  require_null_band(o, h.at("dap-welch"));
  require_runtime(o, sw, 300);
  return o;
}

Outcome a4() {
  Stopwatch sw;
  Outcome o;
  const auto pool = pool_for(scenario("poisson-nb", "ignore-half"), 3000);
  const auto h = histories(
      pool, {"sbc:var_y", "sbc:log_lik", "sbc:model_index", "miscalibration", "dap"}, 3000);
  const PowerCurve v = power_curve(h.at("sbc:var_y")), l = power_curve(h.at("sbc:log_lik"));
  const auto first = [](const PowerCurve& pc) {
    return pc.first_80_power ? std::to_string(*pc.first_80_power) : std::string("never");
  };
  o.require((v.first_80_power && *v.first_80_power <= 3000) ||
                (l.first_80_power && *l.first_80_power <= 3000),
            "sbc:var_y or sbc:log_lik reaches 80% power within 3000: var_y at " + first(v) +
                ", log_lik at " + first(l));
  require_null_band(o, h.at("sbc:model_index"));
  require_null_band(o, h.at("miscalibration"));
  require_null_band(o, h.at("dap"));
  require_runtime(o, sw, 600);
  return o;
}

Outcome a5() {
  Stopwatch sw;
  Outcome o;
  const auto pool = pool_for(scenario("poisson-nb", "log-noise:2"), 1000);
  const auto h = histories(
      pool, {"miscalibration", "sbc:model_index", "sbc:log_lik", "sbc:var_y", "dap"}, 1000);
  require_power(o, h.at("miscalibration"), 1000);
  require_power(o, h.at("sbc:model_index"), 1000);
  for (const char* q : {"sbc:log_lik", "sbc:var_y"}) {
    const PowerCurve pc = power_curve(h.at(q));
    o.note(fmt("%s first 80%% power at %s", q,
               pc.first_80_power ? std::to_string(*pc.first_80_power).c_str() : "never"));
  }
  const double dap = power_at(h.at("dap"), 1000);
  o.require(dap < 0.30, fmt("dap power at 1000 = %.2f < 0.30", dap));
  require_runtime(o, sw, 300);
  return o;
}

std::vector<TableCell> table(const std::string& name, BmaProblem p,
                             std::vector<std::size_t> sizes) {
  TableConfig tc;
  tc.sample_sizes = std::move(sizes);
  tc.jzs_scales.clear();
  const std::vector<TableScenario> s{{name, std::move(p)}};
  return fp_power_table(s, tc, 2024);
}

double rate_of(const std::vector<TableCell>& cells, std::size_t n, const std::string& test) {
  for (const auto& c : cells)
    if (c.n == n && c.test == test) return c.rate;
  return std::nan("");
}

Outcome a6() {
  Stopwatch sw;
  Outcome o;
  const auto cells = table("poisson-nb-bias", scenario("poisson-nb", "log-bias:2"), {10, 20, 50});
  const std::map<std::pair<std::size_t, std::string>, double> reference{
      {{10, "t"}, 0.882},      {{20, "t"}, 0.994},      {{50, "t"}, 1.000},
      {{10, "gaffke"}, 0.595}, {{20, "gaffke"}, 0.987}, {{50, "gaffke"}, 1.000}};
  for (const auto& [key, ref] : reference) {
    const double r = rate_of(cells, key.first, key.second);
    o.require(std::abs(r - ref) <= 0.05, fmt("%s n=%zu power %.3f vs reference %.3f (+-0.05)",
                                             key.second.c_str(), key.first, r, ref));
  }
  require_runtime(o, sw, 600);
  return o;
}

Outcome a7() {
  Stopwatch sw;
  Outcome o;
  const auto cauchy = table("good-cauchy", scenario("good-cauchy"), {10});
  const double t = rate_of(cauchy, 10, "t"), g = rate_of(cauchy, 10, "gaffke");
  o.require(t >= 0.15 && t <= 0.31, fmt("good-cauchy n=10 t FP %.3f in [0.15, 0.31]", t));
  o.require(g <= 0.02, fmt("good-cauchy n=10 gaffke FP %.3f <= 0.02", g));
  const auto normal = table("good-normal", scenario("good-normal"), {100});
  const double tn = rate_of(normal, 100, "t");
  o.require(tn >= 0.03 && tn <= 0.08, fmt("good-normal n=100 t FP %.3f in [0.03, 0.08]", tn));
  require_runtime(o, sw, 600);
  return o;
}

Outcome a8() {
  Outcome o;
  const auto p = cli::build_scenario("poisson-nb", "", "mean-between:0.5:6");
  int passed = 0;
  std::string failures;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    EngineConfig ec;
    ec.n_sims = 2000;
    ec.master_seed = seed;
    const auto rs = run_sbc(p, ec);
    std::string failed;
    if (all_pass_bonferroni(rs, false, 0.05, seed, &failed))
      ++passed;
    else
      failures += fmt(" seed %d: %s;", static_cast<int>(seed), failed.c_str());
  }
  o.note("checks per seed: sbc on each quantity, miscalibration, dap-welch; family level 5%");
  o.require(passed >= 18, fmt("all checks pass in %d of 20 seeds (need 18)", passed));
  if (!failures.empty()) o.note("rejections:" + failures);
  return o;
}

std::vector<double> good_log_bf01(const zoo::GoodPair& pair, std::size_t n, std::uint64_t seed) {
  Rng rng = derive_stream(seed, 0, 0x676f6f64);
  std::vector<double> out(n);
  for (auto& v : out) v = -zoo::good_pair_true_log_bf(std_normal(rng), pair);
  return out;
}

Outcome a9() {
  Outcome o;
  const zoo::GoodPair normal{zoo::GoodPair::Variant::normal_mu, 1.0};
  const auto r = good_check_summary(good_log_bf01(normal, 100'000, 1), 1000, 1);
  const double mean = r.extra("mean"), sem = r.extra("sem"), var = r.extra("variance");
  o.require(std::abs(mean - 1.0) <= 3 * sem,
            fmt("normal mu=1: mean BF %.4f within 3 SEM (%.4f) of 1", mean, sem));
  o.require(std::abs(var - (std::exp(1.0) - 1.0)) <= 0.1,
            fmt("normal mu=1: variance %.4f within 0.1 of e-1 = %.4f", var, std::exp(1.0) - 1));
  const double sem2 = std::sqrt((std::exp(4.0) - 1.0) / 5360.0);
  o.require(sem2 >= 0.0995 && sem2 <= 0.1005, fmt("SEM at mu=2 and 5360 sims = %.5f", sem2));
  const zoo::GoodPair cauchy{zoo::GoodPair::Variant::cauchy, 0.0};
  const auto c = good_check_summary(good_log_bf01(cauchy, 100'000, 1), 1000, 1);
  o.require(c.extra("conclusive") == 0.0,
            fmt("cauchy: mean %.4f, sem %.4f, lower bound %.4f, flag %s", c.extra("mean"),
                c.extra("sem"), c.extra("lower_bound"),
                c.extra("conclusive") == 0.0 ? "off" : "on"));
  return o;
}

Outcome a10() {
  Outcome o;
  const std::vector<std::pair<std::size_t, double>> rows{{2000, 0.036}, {10000, 0.016},
                                                         {50000, 0.007}};
  for (const auto& [S, ref] : rows) {
    const double s = sbc_sensitivity(S);
    o.require(std::abs(s - ref) <= 0.002, fmt("S=%zu sensitivity %.4f vs %.3f", S, s, ref));
  }
  return o;
}

Outcome a11() {
  Stopwatch sw;
  Outcome o;
  const zoo::NestedNormal spec;
  Dataset y1;
  y1.values = {0.0};
  const auto lm = zoo::nested_normal_log_marginals(y1, spec);
  const double implied =
      posterior_model_prob(lm.log_m1 - lm.log_m0, posterior_sbc_prior(lm.log_m0, lm.log_m1))
          .value();
  o.require(std::abs(implied - 0.5) <= 1e-12, fmt("implied Pr(M1|y1) = %.17g", implied));

  int passed = 0;
  std::string failures;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    EngineConfig ec;
    ec.n_sims = 1000;
    ec.master_seed = seed;
    const auto rs = run_posterior_sbc(spec, y1, ec);
    std::string failed;
    if (all_pass_bonferroni(rs, true, 0.05, seed, &failed))
      ++passed;
    else
      failures += fmt(" seed %d: %s;", static_cast<int>(seed), failed.c_str());
  }
  o.require(passed >= 18, fmt("correct candidate: all checks pass in %d of 20 seeds (need 18, "
                              "family level 5%%)",
                              passed));
  if (!failures.empty()) o.note("rejections:" + failures);

  EngineConfig ec;
  ec.n_sims = 20000;
  ec.master_seed = kPoolSeed;
  const auto pool = run_posterior_sbc(spec, y1, ec, PosteriorSbcPrior::unconditioned);
  const auto h = histories(pool, {"miscalibration"}, 2000, 50);
  require_power(o, h.at("miscalibration"), 2000);
  o.note(fmt("runtime %.1f s", sw.seconds()));
  return o;
}

Outcome a12() {
  Stopwatch sw;
  Outcome o;
  const std::vector<std::pair<std::string, std::string>> cells{
      {"binary-toy", ""},          {"binary-toy", "flip"},         {"poisson-nb", "constant"},
      {"poisson-nb", "ignore-half"}, {"poisson-nb", "log-noise:2"}, {"poisson-nb", "log-bias:2"}};
  for (const auto& [model, fault] : cells) {
    EngineConfig ec;
    ec.n_sims = 5000;
    ec.master_seed = kPoolSeed;
    ec.quantities = {"model_index"};
    const auto rs = run_sbc(scenario(model, fault), ec);
    const auto probs = rs.probs();
    const auto mc = miscalibration_test(probs, rs.true_indices(), 2000, kPoolSeed);
    CheckReport dap;
    try {
      dap = dap_t_test(probs, rs.prior_m1);
    } catch (const DegenerateInputError&) {
      dap = dap_welch(probs, rs.true_indices());
    }
    const double pc = mc.threshold_or_pvalue, pd = dap.threshold_or_pvalue;
    const std::string name = model + (fault.empty() ? "" : "+" + fault);
    o.require(!(pc > 0.2 && pd < 0.001),
              fmt("%-24s calibration p %.4f, %s p %.3g", name.c_str(), pc,
                  dap.check_name.c_str(), pd));
  }
  o.note(fmt("runtime %.1f s", sw.seconds()));
  return o;
}

Outcome a13() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "bfcheck_acceptance_a13";
  fs::remove_all(root);
  std::map<std::string, std::string> bytes;
  for (const char* jobs : {"1", "8"}) {
    const std::string out = (root / ("jobs" + std::string(jobs))).string();
    std::ostringstream so, se;
    const int code = cli::run({"simulate", "--scenario", "poisson-nb", "--sims", "2000", "--seed",
                               "20240917", "--jobs", jobs, "--out", out},
                              so, se);
    o.require(code == 0, fmt("simulate --jobs %s exit %d %s", jobs, code, se.str().c_str()));
    if (code == 0) bytes[jobs] = report::read_file(out + "/records.csv");
  }
  o.require(bytes.size() == 2 && bytes["1"] == bytes["8"] && !bytes["1"].empty(),
            fmt("records.csv identical at --jobs 1 and 8 (%zu bytes)", bytes["1"].size()));
  fs::remove_all(root);
  return o;
}

const std::vector<std::pair<std::string, std::pair<std::string, std::function<Outcome()>>>>&
criteria() {
  static const std::vector<
      std::pair<std::string, std::pair<std::string, std::function<Outcome()>>>>
      all{{"A1", {"null calibration, correct binary toy", a1}},
          {"A2", {"flip fault detection, binary toy", a2}},
          {"A3", {"constant fault, Poisson-NB", a3}},
          {"A4", {"ignore-half fault, Poisson-NB", a4}},
          {"A5", {"log-noise sd=2 fault, Poisson-NB", a5}},
          {"A6", {"log-bias +2 power table", a6}},
          {"A7", {"false-positive table rows", a7}},
          {"A8", {"rejection-sampling invariance", a8}},
          {"A9", {"Good-check moments", a9}},
          {"A10", {"SBC sensitivity", a10}},
          {"A11", {"posterior SBC", a11}},
          {"A12", {"calibration vs DAP consistency", a12}},
          {"A13", {"determinism across --jobs", a13}}};
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: acceptance <A1..A13 | all>\n");
    return 1;
  }
  const std::string want = argv[1];
  bool any = false, all_pass = true;
  for (const auto& [id, entry] : criteria()) {
    if (want != "all" && want != id) continue;
    any = true;
    Stopwatch sw;
    Outcome o;
    try {
      o = entry.second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::printf("%s %s  %s (%.1f s)\n", id.c_str(), o.pass ? "PASS" : "FAIL",
                entry.first.c_str(), sw.seconds());
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  if (!any) {
    std::fprintf(stderr, "unknown criterion '%s'\n", want.c_str());
    return 1;
  }
  return all_pass ? 0 : 1;
}
