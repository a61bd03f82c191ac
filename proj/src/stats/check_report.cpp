#include "bfcheck/stats/check_report.hpp"

#include "bfcheck/error.hpp"

namespace bfcheck {

double CheckReport::extra(const std::string& name) const {
  const auto it = extras.find(name);
  if (it == extras.end())
    throw Error("check '" + check_name + "' has no extra '" + name + "'");
  return it->second;
}

const char* to_string(Decision d) {
  return d == Decision::reject ? "reject" : "pass";
}

}  // namespace bfcheck
