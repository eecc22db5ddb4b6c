// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
#include "convlab/theorems.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>

int main() {
  convlab::SuiteOptions opts;
  opts.on_result = [](const convlab::CriterionResult& r) {
    const char* tag = r.status == convlab::CriterionStatus::Pass   ? "PASS"
                      : r.status == convlab::CriterionStatus::Fail ? "FAIL"
                                                                   : "SKIP";
    std::printf("%s  criterion %2d  %-58s %5.1f s  %s\n", tag, r.id, r.title.c_str(), r.seconds, r.summary.c_str());
    if (r.status == convlab::CriterionStatus::Fail)
      for (const auto& row : r.rows)
        if (!row["pass"].get<bool>()) std::printf("      failed: %s\n", row.dump().c_str());
    std::fflush(stdout);
  };
  const convlab::SuiteResult res = convlab::run_theorem_suite(opts);
  int passed = 0;
  for (const auto& c : res.criteria) passed += c.status == convlab::CriterionStatus::Pass ? 1 : 0;
  std::printf("%d/%zu criteria passed\n", passed, res.criteria.size());
  return passed == static_cast<int>(res.criteria.size()) ? 0 : 1;
}
