#include <cstring>
#include <iostream>
#include <string>

#include "torwalk/acceptance.hpp"

int main(int argc, char** argv) {
    std::string suite = "core";
    std::uint64_t seed = 7;
    int workers = 0;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--suite") && i + 1 < argc) suite = argv[++i];
        else if (!std::strcmp(argv[i], "--seed") && i + 1 < argc)
            seed = std::stoull(argv[++i]);
        else if (!std::strcmp(argv[i], "--workers") && i + 1 < argc)
            workers = std::stoi(argv[++i]);
        else {
            std::cerr << "usage: acceptance_suite [--suite core|fast] [--seed N] "
                         "[--workers N]\n";
            return 2;
        }
    }
    auto report = torwalk::run_acceptance(suite, seed, workers, &std::cout);
    int failed = 0;
    for (const auto& c : report.criteria)
        if (!c.pass) ++failed;
    std::cout << (failed == 0 ? "ALL CRITERIA PASS" : "CRITERIA FAILED") << " ("
              << report.criteria.size() - failed << "/" << report.criteria.size()
              << ")\n";
    return failed == 0 ? 0 : 1;
}
