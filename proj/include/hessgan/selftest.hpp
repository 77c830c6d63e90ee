#pragma once

#include <ostream>

namespace hessgan {

/// Runs the oracle suites, printing one PASS/FAIL line each. Returns true when all pass.
bool run_selftest(std::ostream& out);

}  // namespace hessgan
