#pragma once

// Deliberate corruptions of a correct Bayes factor computer.

#include <string>

#include "bfcheck/bma.hpp"

namespace bfcheck {

struct FaultSpec {
  enum class Kind { flip, constant_even, ignore_half, log_noise, log_bias };
  Kind kind = Kind::flip;
  double noise_sd = 2.0;
  double bias = 2.0;
};

/// flip: -base. constant_even: 0. ignore_half: base on the first ceil(n/2)
/// observations. log_noise: base + N(0, noise_sd) from the simulation rng.
/// log_bias: base + bias.
BfComputer apply_fault(BfComputer base, const FaultSpec& fault);

/// Parse flip | constant | ignore-half | log-noise:SD | log-bias:B.
FaultSpec parse_fault(const std::string& text);
std::string to_string(const FaultSpec& fault);

}  // namespace bfcheck
