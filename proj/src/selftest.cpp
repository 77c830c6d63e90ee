#include "hessgan/selftest.hpp"

#include <fmt/format.h>

#include "hessgan/kernels.hpp"
#include "hessgan/oracles.hpp"

namespace hessgan {

bool run_selftest(std::ostream& out) {
    out << fmt::format("active kernels: {}\n", kernels::backend_name(kernels::active_backend()));
    std::vector<oracle::SuiteResult> results;
    for (auto& r : oracle::kernel_suite(11)) results.push_back(std::move(r));
    for (auto& r : oracle::derivative_suite(100, 12)) results.push_back(std::move(r));
    for (auto& r : oracle::lanczos_suite(20, 13)) results.push_back(std::move(r));
    for (auto& r : oracle::slq_suite(14)) results.push_back(std::move(r));
    bool ok = true;
    for (const auto& r : results) {
        out << fmt::format("{} {}: worst {:.3g} (tol {:.0e}){}\n", r.passed ? "PASS" : "FAIL", r.name, r.worst,
                           r.tolerance, r.detail.empty() ? "" : "  [" + r.detail + "]");
        ok = ok && r.passed;
    }
    return ok;
}

}  // namespace hessgan
