#ifndef ALMECH_VERIFY_HPP
#define ALMECH_VERIFY_HPP

#include "almech/systems.hpp"

namespace almech {
namespace verify {

struct CheckResult {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

// Named checks available through the command line. Unknown names raise
// ConfigError; checks not applicable to the system raise ConfigError too.
std::vector<CheckResult> run_check(const systems::SystemDescriptor& desc, const std::string& check,
                                   uint64_t seed);

std::vector<CheckResult> run_checks(const systems::SystemDescriptor& desc,
                                    const std::vector<std::string>& checks, uint64_t seed);

// Engine-level self checks: integrator order, complete-lift property,
// finite differences against analytic gradients.
std::vector<CheckResult> numerics_selfchecks(uint64_t seed);

// Drift-law sweep for the rolling ball (energy rate against the closed form).
std::vector<CheckResult> ball_drift_law(const systems::SystemDescriptor& ball, uint64_t seed);

// Bracket-table suite entries (full and reduced tables, bracket axioms,
// extension independence, evolution law, Jacobi defect).
std::vector<CheckResult> bracket_suite(const systems::SystemDescriptor& ball, uint64_t seed);

} // namespace verify
} // namespace almech

#endif
