// Acceptance suite: one line per criterion, exit code = failure count.

#include <cstdio>
#include <string>
#include <vector>

#include "almech/verify.hpp"

using namespace almech;
using verify::CheckResult;

namespace {

int failures = 0;

void report(const std::string& tag, const std::vector<CheckResult>& results) {
    for (const auto& r : results) {
        if (!r.pass) ++failures;
        std::printf("[%s] %-52s %s  measured=%.3e  tol=%.3e%s%s%s\n", tag.c_str(), r.name.c_str(),
                    r.pass ? "PASS" : "FAIL", r.measured, r.tolerance,
                    r.detail.empty() ? "" : "  (", r.detail.c_str(), r.detail.empty() ? "" : ")");
    }
    std::fflush(stdout);
}

} // namespace

int main() {
    const uint64_t seed = 20240517;

    systems::SystemDescriptor suslov = systems::build("suslov");
    systems::SystemDescriptor sleigh = systems::build("chaplygin_sleigh");
    systems::SystemDescriptor veselova = systems::build("veselova");
    systems::SystemDescriptor robot = systems::build("mobile_robot");
    systems::SystemDescriptor ball = systems::build("rolling_ball");
    std::vector<const systems::SystemDescriptor*> all = {&suslov, &sleigh, &veselova, &robot, &ball};

    try {
        // 1. Structure equations on all seven built-in charts.
        for (const auto* d : all) report("1", verify::run_check(*d, "structure_equations", seed));

        // 2. Regularity matrices positive definite on sampled states.
        for (const auto* d : all) report("2", verify::run_check(*d, "regularity_sweep", seed));

        // 3. Route equivalence of the four constrained solves.
        for (const auto* d : all) report("3", verify::run_check(*d, "route_equivalence", seed));

        // 4. Engine versus closed-form oracles.
        for (const auto* d : all) report("4", verify::run_check(*d, "oracle_match", seed));

        // 5. Conservation: energy on linear systems, the Noether constant,
        //    and the Veselova invariants. The tilted constraint axis makes
        //    the rigid-body flow genuinely nontrivial.
        systems::SystemDescriptor tilted = systems::build(
            "suslov", {{"Gamma1", 0.6}, {"Gamma2", 0.0}, {"Gamma3", 0.8}});
        tilted.name = "suslov-tilted";
        for (const auto* d : {&suslov, &tilted, &sleigh, &veselova, &robot})
            report("5", verify::run_check(*d, "energy", seed));
        report("5", verify::run_check(suslov, "noether", seed));

        // 6. Nonlinear energy-rate law for the spinning table.
        report("6", verify::ball_drift_law(ball, seed));

        // 7. Bracket suite (tables, axioms, evolution law, Jacobi defect),
        //    plus the evolution law on a linear system.
        report("7", verify::bracket_suite(ball, seed));
        {
            IntegratorConfig cfg = sleigh.integrator;
            cfg.sample_every = 5;
            Trajectory traj = integrate_constrained(*sleigh.linear, sleigh.default_state, cfg);
            Observable v1 = fiber_linear_observable(sleigh.chart, Vec(Vec::Unit(3, 1)), "v1");
            auto rep = evolution_residual(*sleigh.linear, v1, traj);
            report("7", {{"bracket(sleigh evolution f=v1)", rep.max_residual, 1e-6,
                          rep.max_residual <= 1e-6, ""}});
        }

        // 8. Reduction suite: commutation, energy correspondence, staging,
        //    almost-Poisson morphism.
        for (const auto* d : {&sleigh, &robot, &ball})
            report("8", verify::run_check(*d, "reduction", seed));

        // 9. Chaplygin reduction of the robot.
        report("9", verify::run_check(robot, "chaplygin", seed));

        // 10. Momentum equation along free and constrained flows.
        for (const auto* d : {&suslov, &sleigh, &veselova})
            report("10", verify::run_check(*d, "momentum", seed));

        // 11. Engine self-checks.
        report("11", verify::numerics_selfchecks(seed));
    } catch (const std::exception& e) {
        std::printf("[!!] acceptance run aborted: %s\n", e.what());
        return 99;
    }

    std::printf("\n%d criterion line(s) failed\n", failures);
    return failures;
}
