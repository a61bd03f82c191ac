#include "bfcheck/report/artifacts.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "bfcheck/error.hpp"

namespace bfcheck::report {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error("malformed number '" + s + "' in " + what);
  return v;
}

long long parse_int(const std::string& s, const std::string& what) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error("malformed integer '" + s + "' in " + what);
  return v;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double from_number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string format_short(double x) {
  if (!std::isfinite(x)) return format_double(x);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// ---------------------------------------------------------------------------

void write_records_csv(const RecordSet& records, std::ostream& out) {
  out << "sim_id,true_index,p_m1";
  for (const auto& q : records.quantity_names) out << ",rank_" << q;
  out << ",accept_attempts,mean,variance,length\n";
  for (const auto& r : records.records) {
    out << r.sim_id << ',' << r.true_index << ','
        << (r.failed ? std::string("nan") : format_double(r.p_m1));
    for (int k : r.ranks) {
      out << ',';
      if (!r.failed) out << k;
    }
    out << ',' << r.accept_attempts << ',' << format_double(r.summary.mean) << ','
        << format_double(r.summary.variance) << ',' << r.summary.length << '\n';
  }
}

RecordSet read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("records.csv is empty");
  const auto header = split(line);
  const std::size_t n = header.size();
  if (n < 7 || header[0] != "sim_id" || header[1] != "true_index" || header[2] != "p_m1" ||
      header[n - 4] != "accept_attempts" || header[n - 1] != "length")
    throw Error("records.csv has an unexpected header");
  RecordSet rs;
  for (std::size_t c = 3; c + 4 < n; ++c) {
    if (header[c].rfind("rank_", 0) != 0)
      throw Error("records.csv: unexpected column '" + header[c] + "'");
    rs.quantity_names.push_back(header[c].substr(5));
  }
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    const std::string where = "records.csv line " + std::to_string(row);
    if (f.size() != n) throw Error(where + ": expected " + std::to_string(n) + " fields");
    SimulationRecord r;
    r.sim_id = static_cast<std::size_t>(parse_int(f[0], where));
    r.true_index = static_cast<int>(parse_int(f[1], where));
    r.p_m1 = parse_double(f[2], where);
    r.failed = std::isnan(r.p_m1);
    for (std::size_t c = 3; c + 4 < n; ++c)
      r.ranks.push_back(f[c].empty() ? -1 : static_cast<int>(parse_int(f[c], where)));
    r.accept_attempts = static_cast<std::size_t>(parse_int(f[n - 4], where));
    r.summary.mean = parse_double(f[n - 3], where);
    r.summary.variance = parse_double(f[n - 2], where);
    r.summary.length = static_cast<std::size_t>(parse_int(f[n - 1], where));
    rs.records.push_back(std::move(r));
  }
  rs.config.n_sims = rs.records.size();
  return rs;
}

// ---------------------------------------------------------------------------

std::string run_json(const RecordSet& records, const RunInfo& info) {
  json j;
  j["schema"] = kRunSchema;
  j["problem_id"] = records.problem_id;
  j["scenario"] = info.scenario;
  j["fault"] = info.fault;
  j["accept"] = info.accept;
  j["prior_m1"] = records.prior_m1;
  j["n_sims"] = records.config.n_sims;
  j["n_draws"] = records.config.n_draws;
  j["master_seed"] = records.config.master_seed;
  j["quantities"] = records.quantity_names;
  j["failures"] = records.failures();
  return j.dump(2) + "\n";
}

RunInfo read_run_json(const std::string& text, RecordSet& records) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("run.json is not valid JSON: ") + e.what());
  }
  if (j.value("schema", "") != kRunSchema)
    throw Error("run.json schema is not " + std::string(kRunSchema));
  try {
    records.problem_id = j.at("problem_id").get<std::string>();
    records.prior_m1 = j.at("prior_m1").get<double>();
    records.config.n_sims = j.at("n_sims").get<std::size_t>();
    records.config.n_draws = j.at("n_draws").get<std::size_t>();
    records.config.master_seed = j.at("master_seed").get<std::uint64_t>();
    records.config.quantities = j.at("quantities").get<std::vector<std::string>>();
    return {j.at("scenario").get<std::string>(), j.at("fault").get<std::string>(),
            j.at("accept").get<std::string>()};
  } catch (const json::exception& e) {
    throw Error(std::string("run.json is missing a field: ") + e.what());
  }
}

std::string checks_json(const std::vector<CheckReport>& reports,
                        const std::string& problem_id, double alpha) {
  json arr = json::array();
  for (const auto& r : reports) {
    json extras = json::object();
    for (const auto& [k, v] : r.extras) extras[k] = number(v);
    arr.push_back({{"check_name", r.check_name},
                   {"statistic", number(r.statistic)},
                   {"threshold_or_pvalue", number(r.threshold_or_pvalue)},
                   {"decision", to_string(r.decision)},
                   {"n_sims_used", r.n_sims_used},
                   {"extras", extras}});
  }
  json j;
  j["schema"] = kChecksSchema;
  j["problem_id"] = problem_id;
  j["alpha"] = alpha;
  j["checks"] = arr;
  return j.dump(2) + "\n";
}

std::vector<CheckReport> read_checks_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("schema", "") != kChecksSchema)
      throw Error("checks.json schema is not " + std::string(kChecksSchema));
    std::vector<CheckReport> out;
    for (const auto& c : j.at("checks")) {
      CheckReport r;
      r.check_name = c.at("check_name").get<std::string>();
      r.statistic = from_number(c.at("statistic"));
      r.threshold_or_pvalue = from_number(c.at("threshold_or_pvalue"));
      r.decision = c.at("decision").get<std::string>() == "reject" ? Decision::reject
                                                                   : Decision::pass;
      r.n_sims_used = c.at("n_sims_used").get<std::size_t>();
      for (const auto& [k, v] : c.at("extras").items()) r.extras[k] = from_number(v);
      out.push_back(std::move(r));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(std::string("checks.json is malformed: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

void write_curves_csv(const std::vector<HistoryCurve>& curves, std::ostream& out) {
  out << "check,history_id,n_sims,statistic,reject\n";
  for (const auto& c : curves)
    for (std::size_t h = 0; h < c.rows.size(); ++h)
      for (std::size_t g = 0; g < c.grid.size(); ++g) {
        const double rej = c.rows[h].reject[g];
        out << c.check_name << ',' << h + 1 << ',' << c.grid[g] << ','
            << format_double(c.rows[h].statistic[g]) << ','
            << (std::isnan(rej) ? std::string("nan") : std::to_string(static_cast<int>(rej)))
            << '\n';
      }
}

std::vector<HistoryCurve> read_curves_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split(line).size() != 5 || split(line)[0] != "check")
    throw Error("curves.csv has an unexpected header");
  std::vector<HistoryCurve> curves;
  std::map<std::string, std::size_t> index;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    const std::string where = "curves.csv line " + std::to_string(row);
    if (f.size() != 5) throw Error(where + ": expected 5 fields");
    auto [it, fresh] = index.try_emplace(f[0], curves.size());
    if (fresh) curves.push_back({f[0], {}, {}});
    HistoryCurve& c = curves[it->second];
    const auto h = static_cast<std::size_t>(parse_int(f[1], where));
    const auto n = static_cast<std::size_t>(parse_int(f[2], where));
    if (h == 0) throw Error(where + ": history ids start at 1");
    if (h > c.rows.size()) c.rows.resize(h);
    if (h == 1) c.grid.push_back(n);
    c.rows[h - 1].statistic.push_back(parse_double(f[3], where));
    c.rows[h - 1].reject.push_back(parse_double(f[4], where));
  }
  for (const auto& c : curves)
    for (const auto& r : c.rows)
      if (r.statistic.size() != c.grid.size())
        throw Error("curves.csv: histories of '" + c.check_name + "' differ in length");
  return curves;
}

void write_table_csv(const std::vector<TableCell>& cells, std::ostream& out) {
  out << "scenario,n,test,rate,se,n_runs\n";
  for (const auto& c : cells)
    out << c.scenario << ',' << c.n << ',' << c.test << ',' << format_double(c.rate) << ','
        << format_double(c.se) << ',' << c.n_runs << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path);
  f << content;
  if (!f) throw Error("failed writing " + path);
}

}  // namespace bfcheck::report
