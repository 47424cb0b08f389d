#pragma once

#include <string>
#include <vector>

namespace starclab::acceptance {

struct CriterionResult {
    int id;
    std::string name;
    bool passed;
    std::string detail;
    double seconds;
};

/// Criterion ids in suite order (1 through 12).
std::vector<int> criterion_ids();

/// Runs one criterion. Unknown ids throw ValidationError; other exceptions count as failures.
CriterionResult run_criterion(int id);

std::vector<CriterionResult> run_suite();

/// One line: "PASS  3  name  (1.23 s)  detail".
std::string format_line(const CriterionResult& result);

}  // namespace starclab::acceptance
