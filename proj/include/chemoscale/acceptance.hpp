#pragma once

#include <string>
#include <vector>

namespace chemoscale {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string summary;
    double seconds = 0.0;
};

inline constexpr int kCriterionCount = 10;

const char* criterion_name(int id);

/// Runs one acceptance criterion (1..10). Workers > 1 parallelize sweep runs.
CriterionResult run_criterion(int id, unsigned workers = 1);

/// "PASS [id] name: summary (seconds)"
std::string format_result(const CriterionResult& r);

}  // namespace chemoscale
