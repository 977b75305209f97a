#pragma once

#include <string>
#include <vector>

namespace uwct::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Runs the oracle and gradient suites in-process: SSIM against the
// brute-force reference, finite-difference gradients for every op, the
// ADAM recurrence, replay buffer statistics, conv shape algebra, the
// receptive field and a seeded determinism mini-run.
std::vector<CheckResult> run_all();

}  // namespace uwct::selftest
