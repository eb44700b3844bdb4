#pragma once

#include <string>
#include <vector>

namespace qwork {

struct ValidationOptions {
  // Quick: 2- and 4-site cells only. Otherwise a few 6-site cells are added.
  bool quick = true;
  // Test hook: the fluctuation-theorem propagators get their first step
  // halved, which must make that check fail.
  bool inject_fault = false;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;      // largest violation measured
  double tolerance = 0.0;
  int cases = 0;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool passed() const;
};

// Unitarity, TPM normalization, trace work vs TPM first moment, Jarzynski
// equality, non-negative exact entropy production and U-independence of the
// NI scheme, over a built-in grid.
ValidationReport run_validation(const ValidationOptions& options = {});

}  // namespace qwork
