#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace torwalk {

struct CriterionResult {
    int number = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceReport {
    std::vector<CriterionResult> criteria;
    bool all_pass() const {
        for (const auto& c : criteria)
            if (!c.pass) return false;
        return true;
    }
};

/// Runs the verification battery, one pass/fail line per criterion when
/// `live` is given. Suites: "core" (everything) or "fast" (skips the two
/// heaviest geometry sweeps; development convenience).
AcceptanceReport run_acceptance(const std::string& suite, std::uint64_t seed, int workers,
                                std::ostream* live = nullptr);

}  // namespace torwalk
