#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace tsig::cli {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  nlohmann::json metrics = nlohmann::json::object();
};

// The bundled invariant suite, one entry per acceptance criterion. The
// output depends only on the seed, not on thread count or timing.
std::vector<CriterionResult> run_verify_suite(unsigned seed);

constexpr int kCriterionCount = 13;

// A single criterion, 1-based.
CriterionResult run_criterion(int id, unsigned seed);

nlohmann::json to_json(const std::vector<CriterionResult>& results);

}  // namespace tsig::cli
