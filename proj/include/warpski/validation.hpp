#pragma once

#include <functional>
#include <string>
#include <vector>

namespace warpski {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;
};

/// One named invariant of a module, checked against an independent oracle.
struct PropertyCheck {
  std::string name;    // "<module>.<property>"
  std::string module;
  std::string description;
  std::function<CheckResult()> run;
};

std::vector<PropertyCheck> property_suite();

/// Runs every check whose name contains `filter` (all when empty). A check
/// that throws is reported as failed with the message in `detail`.
std::vector<CheckResult> run_properties(const std::string& filter = "",
                                        const std::function<void(const CheckResult&)>& on_result = {});

}  // namespace warpski
