#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace convlab {

enum class CriterionStatus { Pass, Fail, Skipped };
const char* to_string(CriterionStatus s);

struct CriterionResult {
  int id = 0;
  std::string title;
  CriterionStatus status = CriterionStatus::Skipped;
  // One entry per measured quantity: {model, item, measured, expected, tolerance, pass}.
  nlohmann::json rows = nlohmann::json::array();
  std::string summary;  // short human-readable digest of the measurements
  double seconds = 0;
};

struct SuiteOptions {
  std::vector<std::string> models;  // empty: all built-in models
  std::uint64_t seed = 2024;
  // Called after each criterion finishes.
  std::function<void(const CriterionResult&)> on_result;
};

struct SuiteResult {
  std::vector<CriterionResult> criteria;
  bool passed = true;  // no criterion failed
};

SuiteResult run_theorem_suite(const SuiteOptions& opts = {});
nlohmann::json to_json(const SuiteResult& s);

// Seeded sample points used by the suite, in chart-0 coordinates.
std::vector<std::vector<double>> suite_points(const std::string& model, int count, std::uint64_t seed);

}  // namespace convlab
