// Runs the acceptance criteria and prints one line per criterion. Exit status 0 only if all pass.

#include "starclab/acceptance.hpp"
#include "starclab/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite"};
    std::vector<int> ids;
    app.add_option("--criterion", ids, "Criteria to run (default: all)");
    CLI11_PARSE(app, argc, argv);
    if (ids.empty()) ids = starclab::acceptance::criterion_ids();

    int failed = 0;
    try {
        for (const int id : ids) {
            const auto result = starclab::acceptance::run_criterion(id);
            std::cout << starclab::acceptance::format_line(result) << std::endl;
            failed += result.passed ? 0 : 1;
        }
    } catch (const starclab::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    std::cout << (ids.size() - failed) << "/" << ids.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
