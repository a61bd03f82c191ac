#include "bfcheck/faults.hpp"

#include <cmath>
#include <sstream>

#include "bfcheck/error.hpp"

namespace bfcheck {

BfComputer apply_fault(BfComputer base, const FaultSpec& fault) {
  using Kind = FaultSpec::Kind;
  const std::string name = base.name + "+" + to_string(fault);
  switch (fault.kind) {
    case Kind::flip:
      return {name, [base](const Dataset& y, Rng& rng) { return -base(y, rng); }};
    case Kind::constant_even:
      return {name, [](const Dataset&, Rng&) { return 0.0; }};
    case Kind::ignore_half:
      return {name, [base](const Dataset& y, Rng& rng) {
                if (y.size() < 2)
                  throw Error("ignore-half needs datasets of length >= 2");
                return base(y.prefix((y.size() + 1) / 2), rng);
              }};
    case Kind::log_noise:
      if (!(fault.noise_sd > 0.0))
        throw Error("log-noise standard deviation must be positive");
      return {name, [base, sd = fault.noise_sd](const Dataset& y, Rng& rng) {
                const double b = base(y, rng);
                return b + sd * std_normal(rng);
              }};
    case Kind::log_bias:
      return {name, [base, bias = fault.bias](const Dataset& y, Rng& rng) {
                return base(y, rng) + bias;
              }};
  }
  throw Error("unknown fault kind");
}

namespace {

double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v))
    throw Error("invalid " + what + " '" + s + "'");
  return v;
}

}  // namespace

FaultSpec parse_fault(const std::string& text) {
  using Kind = FaultSpec::Kind;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const bool has_arg = colon != std::string::npos;
  const std::string arg = has_arg ? text.substr(colon + 1) : "";
  FaultSpec f;
  if (head == "flip" && !has_arg) {
    f.kind = Kind::flip;
  } else if (head == "constant" && !has_arg) {
    f.kind = Kind::constant_even;
  } else if (head == "ignore-half" && !has_arg) {
    f.kind = Kind::ignore_half;
  } else if (head == "log-noise") {
    f.kind = Kind::log_noise;
    if (has_arg) f.noise_sd = parse_number(arg, "noise sd");
    if (!(f.noise_sd > 0.0))
      throw Error("log-noise standard deviation must be positive");
  } else if (head == "log-bias") {
    f.kind = Kind::log_bias;
    if (has_arg) f.bias = parse_number(arg, "bias");
  } else {
    throw Error("unknown fault '" + text +
                "'; valid faults: flip constant ignore-half log-noise:SD "
                "log-bias:B");
  }
  return f;
}

std::string to_string(const FaultSpec& fault) {
  using Kind = FaultSpec::Kind;
  std::ostringstream os;
  switch (fault.kind) {
    case Kind::flip: os << "flip"; break;
    case Kind::constant_even: os << "constant"; break;
    case Kind::ignore_half: os << "ignore-half"; break;
    case Kind::log_noise: os << "log-noise:" << fault.noise_sd; break;
    case Kind::log_bias: os << "log-bias:" << fault.bias; break;
  }
  return os.str();
}

}  // namespace bfcheck
