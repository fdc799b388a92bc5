#pragma once
#include <string>
#include <vector>

namespace twolink {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;  // measured numbers, bounds, or the caught error
};

/// The full invariant suite over every module, with fixed seeds: metric and
/// connection identities, kinematic identities, conservation and integrator
/// checks, feedback-law identities, and export determinism. Used by the
/// `verify` CLI subcommand; any failed entry should flip the exit code.
std::vector<CheckResult> run_verification();

bool all_passed(const std::vector<CheckResult>& results);

} // namespace twolink
