#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hpen {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Randomized property checks across every module; deterministic given seed.
std::vector<CheckResult> run_property_suite(std::uint64_t seed = 1);

}  // namespace hpen
