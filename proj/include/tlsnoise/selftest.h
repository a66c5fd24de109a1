#ifndef TLSNOISE_SELFTEST_H
#define TLSNOISE_SELFTEST_H

#include <ostream>
#include <string>
#include <vector>

namespace tlsnoise {

struct SelftestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Fast invariant checks over every module (a few seconds at most). Prints one
/// PASS/FAIL line per check to `log`.
std::vector<SelftestCheck> run_selftest(std::ostream &log);

}  // namespace tlsnoise

#endif
