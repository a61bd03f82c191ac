#include "bfcheck/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "bfcheck/engine.hpp"
#include "bfcheck/error.hpp"
#include "bfcheck/faults.hpp"
#include "bfcheck/history.hpp"
#include "bfcheck/report/artifacts.hpp"
#include "bfcheck/report/svg.hpp"
#include "bfcheck/stats/calibration.hpp"
#include "bfcheck/stats/dap.hpp"
#include "bfcheck/stats/gamma.hpp"
#include "bfcheck/zoo.hpp"

namespace bfcheck::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(key + " expects a number, got '" + v + "'");
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] != '-') {
      const unsigned long long n = std::stoull(v, &used);
      if (used == v.size()) return n;
    }
  } catch (const std::exception&) {
  }
  throw Error(key + " expects a non-negative integer, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

// Settings after merging the config file with flags; flags win.
struct Settings {
  std::map<std::string, std::string> values;

  bool has(const std::string& k) const { return values.count(k) > 0; }
  std::string str(const std::string& k, const std::string& def = "") const {
    const auto it = values.find(k);
    return it == values.end() ? def : it->second;
  }
  std::uint64_t count(const std::string& k, std::uint64_t def) const {
    return has(k) ? to_count(k, str(k)) : def;
  }
  double real(const std::string& k, double def) const {
    return has(k) ? to_double(k, str(k)) : def;
  }
};

struct Context {
  Settings s;
  std::ostream& out;
  std::ostream& err;
  fs::path dir;
  std::uint64_t seed = 0;
};

std::uint64_t resolve_seed(const Settings& s, std::ostream& out) {
  if (s.has("seed")) return s.count("seed", 0);
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  out << "seed: " << seed << " (pass --seed " << seed << " to reproduce)\n";
  return seed;
}

report::RunInfo run_info(const Settings& s) {
  return {s.str("scenario"), s.str("fault"), s.str("accept")};
}

RecordSet simulate(Context& ctx, std::size_t default_sims) {
  if (!ctx.s.has("scenario")) throw Error("--scenario is required to simulate");
  const auto info = run_info(ctx.s);
  const BmaProblem problem = build_scenario(info.scenario, info.fault, info.accept);
  EngineConfig cfg;
  cfg.n_sims = ctx.s.count("sims", default_sims);
  cfg.n_draws = ctx.s.count("draws", 999);
  cfg.master_seed = ctx.seed;
  cfg.jobs = static_cast<unsigned>(ctx.s.count("jobs", 1));
  if (ctx.s.has("quantities")) cfg.quantities = split_list(ctx.s.str("quantities"));
  RecordSet rs = run_sbc(problem, cfg);
  fs::create_directories(ctx.dir);
  std::ostringstream csv;
  report::write_records_csv(rs, csv);
  report::write_file((ctx.dir / "records.csv").string(), csv.str());
  report::write_file((ctx.dir / "run.json").string(), report::run_json(rs, info));
  ctx.out << "simulated " << rs.records.size() << " datasets of " << rs.problem_id;
  if (!info.fault.empty()) ctx.out << " with fault " << info.fault;
  ctx.out << " (" << rs.failures() << " failed) -> " << (ctx.dir / "records.csv").string()
          << "\n";
  return rs;
}

std::optional<RecordSet> load_records(const fs::path& dir, report::RunInfo* info = nullptr) {
  const fs::path csv = dir / "records.csv";
  if (!fs::exists(csv)) return std::nullopt;
  std::ifstream in(csv, std::ios::binary);
  RecordSet rs = report::read_records_csv(in);
  const fs::path meta = dir / "run.json";
  if (!fs::exists(meta))
    throw Error("found " + csv.string() + " but no run.json next to it; rerun simulate");
  const auto stored = report::read_run_json(report::read_file(meta.string()), rs);
  if (info) *info = stored;
  rs.config.quantities = rs.quantity_names;
  return rs;
}

RecordSet records_for(Context& ctx, std::size_t default_sims, report::RunInfo* info = nullptr) {
  if (ctx.s.has("scenario")) {
    if (info) *info = run_info(ctx.s);
    return simulate(ctx, default_sims);
  }
  auto rs = load_records(ctx.dir, info);
  if (!rs)
    throw Error("no records found in " + ctx.dir.string() +
                "; run simulate first or pass --scenario");
  return *rs;
}

// With an accept rule the model prior among accepted datasets is unknown, so
// the DAP mean is compared with the simulated indices instead.
std::vector<CheckReport> run_checks(const RecordSet& rs, bool prior_known, double alpha,
                                    std::size_t B, std::uint64_t seed) {
  std::vector<CheckReport> reports;
  const int M = static_cast<int>(rs.config.n_draws);
  const auto probs = rs.probs();
  if (probs.size() < 2) throw Error("checks need at least 2 successful simulations");
  for (const auto& q : rs.quantity_names)
    reports.push_back(sbc_check(q, rs.ranks(q), M, alpha, kDefaultGammaNullReplicates, 0));
  reports.push_back(miscalibration_test(probs, rs.true_indices(), B, seed, alpha));
  if (!prior_known) {
    reports.push_back(dap_welch(probs, rs.true_indices(), alpha));
    return reports;
  }
  try {
    reports.push_back(dap_t_test(probs, rs.prior_m1, alpha));
  } catch (const DegenerateInputError&) {
    reports.push_back(gaffke_test(probs, rs.prior_m1, kDefaultGaffkeReplicates, seed, alpha));
  }
  return reports;
}

std::string details(const CheckReport& r) {
  using report::format_short;
  const auto has = [&](const char* k) { return r.extras.count(k) > 0; };
  if (r.check_name.rfind("sbc:", 0) == 0) return "sens " + format_short(r.extra("sensitivity"));
  if (r.check_name == "miscalibration")
    return "MCB " + format_short(r.extra("mcb")) + ", Q95 " + format_short(r.extra("q95"));
  if (has("ci_low"))
    return "95% CI [" + format_short(r.extra("ci_low")) + ", " + format_short(r.extra("ci_high")) +
           "]";
  return "";
}

void print_reports(const std::vector<CheckReport>& reports, std::ostream& out) {
  out << "check                 statistic   p/threshold  decision  details\n";
  for (const auto& r : reports) {
    char line[256];
    std::snprintf(line, sizeof line, "%-20s  %-10s  %-11s  %-8s  %s\n", r.check_name.c_str(),
                  report::format_short(r.statistic).c_str(),
                  report::format_short(r.threshold_or_pvalue).c_str(), to_string(r.decision),
                  details(r).c_str());
    out << line;
  }
}

int cmd_simulate(Context& ctx) {
  simulate(ctx, 1000);
  return 0;
}

int cmd_check(Context& ctx) {
  report::RunInfo info;
  const RecordSet rs = records_for(ctx, 1000, &info);
  const double alpha = ctx.s.real("alpha", kDefaultAlpha);
  const auto reports = run_checks(rs, info.accept.empty(), alpha,
                                  ctx.s.count("bootstrap", kDefaultBootstrap),
                                  rs.config.master_seed);
  fs::create_directories(ctx.dir);
  report::write_file((ctx.dir / "checks.json").string(),
                     report::checks_json(reports, rs.problem_id, alpha));
  print_reports(reports, ctx.out);
  const bool any = std::any_of(reports.begin(), reports.end(),
                               [](const CheckReport& r) { return r.rejected(); });
  return any ? 2 : 0;
}

int cmd_history(Context& ctx) {
  HistoryConfig cfg;
  cfg.history_length = ctx.s.count("length", 200);
  cfg.n_histories = ctx.s.count("histories", 100);
  cfg.bootstrap_B = ctx.s.count("bootstrap", kDefaultBootstrap);
  cfg.alpha = ctx.s.real("alpha", kDefaultAlpha);
  cfg.jobs = static_cast<unsigned>(ctx.s.count("jobs", 1));
  const RecordSet pool = records_for(ctx, cfg.pool_multiplier * cfg.history_length);
  const auto checks =
      ctx.s.has("checks") ? split_list(ctx.s.str("checks")) : default_checks(pool);
  const std::uint64_t seed =
      ctx.s.has("scenario") || ctx.s.has("seed") ? ctx.seed : pool.config.master_seed;
  const auto curves = run_histories(pool, checks, cfg, seed);
  fs::create_directories(ctx.dir);
  std::ostringstream csv;
  report::write_curves_csv(curves, csv);
  report::write_file((ctx.dir / "curves.csv").string(), csv.str());
  ctx.out << "check                 first 80% power   final power\n";
  for (const auto& c : curves) {
    const PowerCurve pc = power_curve(c);
    char line[160];
    std::snprintf(line, sizeof line, "%-20s  %-16s  %s\n", c.check_name.c_str(),
                  pc.first_80_power ? std::to_string(*pc.first_80_power).c_str() : "not reached",
                  report::format_short(pc.power.back()).c_str());
    ctx.out << line;
  }
  return 0;
}

int cmd_table(Context& ctx) {
  TableConfig cfg;
  cfg.n_runs = ctx.s.count("runs", 1000);
  cfg.alpha = ctx.s.real("alpha", kDefaultAlpha);
  cfg.jobs = static_cast<unsigned>(ctx.s.count("jobs", 1));
  if (ctx.s.has("sizes")) {
    cfg.sample_sizes.clear();
    for (const auto& v : split_list(ctx.s.str("sizes"))) cfg.sample_sizes.push_back(to_count("sizes", v));
  }
  std::vector<TableScenario> scenarios;
  if (ctx.s.has("scenario")) {
    const auto info = run_info(ctx.s);
    std::string name = info.scenario + (info.fault.empty() ? "" : "+" + info.fault);
    scenarios.push_back({name, build_scenario(info.scenario, info.fault, info.accept)});
  } else {
    scenarios = default_table_scenarios();
  }
  const auto cells = fp_power_table(scenarios, cfg, ctx.seed);
  fs::create_directories(ctx.dir);
  std::ostringstream csv;
  report::write_table_csv(cells, csv);
  report::write_file((ctx.dir / "table.csv").string(), csv.str());
  ctx.out << "scenario              n     test         rate      se\n";
  for (const auto& c : cells) {
    char line[160];
    std::snprintf(line, sizeof line, "%-20s  %-4zu  %-11s  %-8s  %s\n", c.scenario.c_str(), c.n,
                  c.test.c_str(), report::format_short(c.rate).c_str(),
                  report::format_short(c.se).c_str());
    ctx.out << line;
  }
  return 0;
}

std::string file_safe(std::string s) {
  for (auto& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) c = '_';
  return s;
}

int cmd_report(Context& ctx) {
  const auto rs = load_records(ctx.dir);
  const fs::path curves_path = ctx.dir / "curves.csv";
  const bool have_curves = fs::exists(curves_path);
  if (!rs && !have_curves) throw Error("no records found in " + ctx.dir.string());
  const fs::path plots = ctx.dir / "plots";
  fs::create_directories(plots);
  std::size_t written = 0;
  auto emit = [&](const std::string& name, const std::string& svg) {
    report::write_file((plots / name).string(), svg);
    ctx.out << "wrote " << (plots / name).string() << "\n";
    ++written;
  };
  const double alpha = ctx.s.real("alpha", kDefaultAlpha);
  if (rs) {
    const int M = static_cast<int>(rs->config.n_draws);
    for (const auto& q : rs->quantity_names) {
      const auto ranks = rs->ranks(q);
      if (ranks.size() < 10) continue;
      const auto table = gamma_null_quantile(ranks.size(), M, alpha);
      emit("ecdf_" + file_safe(q) + ".svg",
           report::plot_ecdf_diff(ranks, M, table.log_quantile, rs->problem_id + ": " + q));
    }
    const auto probs = rs->probs();
    if (probs.size() >= 20)
      emit("calibration.svg",
           report::plot_calibration(probs, rs->true_indices(), rs->problem_id + ": calibration",
                                    200, rs->config.master_seed));
  }
  if (have_curves) {
    std::ifstream in(curves_path, std::ios::binary);
    for (const auto& c : report::read_curves_csv(in)) {
      std::optional<std::size_t> marker;
      if (c.rows.size() >= 20) marker = power_curve(c).first_80_power;
      emit("history_" + file_safe(c.check_name) + ".svg",
           report::plot_history(c, report::history_style(c.check_name, alpha), marker));
    }
  }
  if (written == 0) throw Error("no records found with enough simulations to plot");
  return 0;
}

}  // namespace

std::vector<std::string> config_keys() {
  return {"scenario", "fault",     "accept", "sims", "draws",  "seed",   "jobs",      "out",
          "alpha",    "quantities", "length", "histories", "bootstrap", "checks", "runs", "sizes"};
}

std::map<std::string, std::string> parse_config(const std::string& text) {
  std::map<std::string, std::string> out;
  const auto keys = config_keys();
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      std::string msg = "config line " + std::to_string(lineno) + ": unknown key '" + key +
                        "'; valid keys:";
      for (const auto& k : keys) msg += " " + k;
      throw Error(msg);
    }
    out[key] = value;
  }
  return out;
}

AcceptFn parse_accept(const std::string& text) {
  const auto parts = [&] {
    std::vector<std::string> p;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) p.push_back(item);
    return p;
  }();
  const std::string valid = "valid accept rules: mean-between:LO:HI, mean-above:X";
  if (parts.size() == 3 && parts[0] == "mean-between") {
    const double lo = to_double("accept", parts[1]), hi = to_double("accept", parts[2]);
    if (!(lo <= hi)) throw Error("mean-between needs LO <= HI");
    return [lo, hi](const Dataset& y) {
      const double m = y.mean();
      return m >= lo && m <= hi ? 1.0 : 0.0;
    };
  }
  if (parts.size() == 2 && parts[0] == "mean-above") {
    const double x = to_double("accept", parts[1]);
    return [x](const Dataset& y) { return y.mean() > x ? 1.0 : 0.0; };
  }
  throw Error("unknown accept rule '" + text + "'; " + valid);
}

BmaProblem build_scenario(const std::string& model, const std::string& fault,
                          const std::string& accept) {
  BmaProblem p = zoo::make_problem(model);
  if (!fault.empty()) p = p.with_candidate(apply_fault(p.true_bf(), parse_fault(fault)));
  if (!accept.empty()) p = p.with_accept(parse_accept(accept));
  return p;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Validate Bayes factor computations by simulation"};
  app.require_subcommand(1);
  std::map<std::string, std::string> flags;
  std::string config_path;

  struct Flag {
    const char* name;
    const char* help;
  };
  const Flag common[] = {{"scenario", "zoo model: binary-toy, poisson-nb, good-cauchy, "
                                      "good-normal[:MU], nested-normal"},
                         {"fault", "flip, constant, ignore-half, log-noise:SD or log-bias:B"},
                         {"accept", "mean-between:LO:HI or mean-above:X"},
                         {"seed", "master seed (drawn and printed when absent)"},
                         {"sims", "number of simulations"},
                         {"draws", "posterior draws per simulation"},
                         {"out", "output directory (default: out)"},
                         {"jobs", "worker threads"},
                         {"alpha", "significance level"},
                         {"quantities", "comma-separated test quantities"},
                         {"bootstrap", "bootstrap replicates of the miscalibration test"}};
  const Flag history_only[] = {{"length", "history length"},
                               {"histories", "number of histories"},
                               {"checks", "comma-separated checks"}};
  const Flag table_only[] = {{"runs", "runs per table cell"},
                             {"sizes", "comma-separated sample sizes"}};

  auto add_flags = [&](CLI::App* sub, std::span<const Flag> list) {
    for (const Flag& f : list)
      sub->add_option_function<std::string>(
          std::string("--") + f.name, [&flags, name = f.name](const std::string& v) { flags[name] = v; },
          f.help);
  };
  using Handler = int (*)(Context&);
  std::vector<std::pair<CLI::App*, Handler>> subs;
  auto add_sub = [&](const char* name, const char* help, Handler h) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value file; flags override it");
    add_flags(sub, common);
    subs.emplace_back(sub, h);
    return sub;
  };
  add_sub("simulate", "run SBC simulations and write records.csv and run.json", cmd_simulate);
  add_sub("check", "run every check on the records and write checks.json", cmd_check);
  add_flags(add_sub("history", "statistic histories and power curves, written to curves.csv",
                    cmd_history),
            history_only);
  add_flags(add_sub("table", "false-positive and power table of the DAP tests", cmd_table),
            table_only);
  add_sub("report", "SVG plots from the CSV files in --out", cmd_report);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    Context ctx{{}, out, err, {}, 0};
    if (!config_path.empty()) ctx.s.values = parse_config(report::read_file(config_path));
    for (const auto& [k, v] : flags) ctx.s.values[k] = v;
    ctx.dir = ctx.s.str("out", "out");
    for (const auto& [sub, handler] : subs) {
      if (!sub->parsed()) continue;
      // Runs that consume stored records reuse their seed unless told otherwise.
      const bool fresh = ctx.s.has("scenario") || sub->get_name() == "table";
      ctx.seed = fresh ? resolve_seed(ctx.s, out) : ctx.s.count("seed", 0);
      return handler(ctx);
    }
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bfcheck::cli
