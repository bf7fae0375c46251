#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace holoseis {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;  // measured values behind the verdict
  double seconds = 0.0;
};

int selftest_count();
std::string selftest_name(int id);
CriterionResult run_criterion(int id);

// Runs the listed criteria (all when empty); each result is reported through
// the callback as soon as it is known.
std::vector<CriterionResult> run_selftest(const std::vector<int>& ids = {},
                                          const std::function<void(const CriterionResult&)>& on_result = {});

// "PASS [ 3] name: detail (1.2 s)"
std::string format_result(const CriterionResult& r);

}  // namespace holoseis
