#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ttk::testing {

struct TrialResult {
  int checks = 0;
  std::vector<std::string> failures;
};

/// One randomized dense-oracle trial over every tt-core operation.
/// Shapes: order ≤ 4, modes ≤ 6, ranks ≤ 4.
TrialResult property_trial(std::uint64_t seed, double tol = 1e-11);

}  // namespace ttk::testing
