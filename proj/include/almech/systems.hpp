#ifndef ALMECH_SYSTEMS_HPP
#define ALMECH_SYSTEMS_HPP

#include <map>
#include <memory>
#include <random>
#include <string>

#include "almech/reduction.hpp"
#include "almech/simulate.hpp"

namespace almech {
namespace systems {

// A reduction pair: source system upstairs, target downstairs, morphism
// between them, optionally staged through an intermediate chart.
struct ReductionPair {
    std::shared_ptr<LinearNHSystem> src_lin, dst_lin, mid_lin;
    std::shared_ptr<NonlinearNHSystem> src_nl, dst_nl;
    MorphismSpec morphism;                   // direct source -> target
    std::shared_ptr<MorphismSpec> stage1;    // source -> intermediate
    std::shared_ptr<MorphismSpec> stage2;    // intermediate -> target
    State src_start;
    std::function<State(std::mt19937_64&)> sample_src; // random on-constraint source state
};

struct SystemDescriptor {
    std::string name;
    std::map<std::string, double> params;

    std::shared_ptr<const AlgebroidChart> chart; // primary chart
    LagrangianField L;
    std::shared_ptr<LinearNHSystem> linear;       // exactly one of these is set
    std::shared_ptr<NonlinearNHSystem> nonlinear;

    State default_state;
    IntegratorConfig integrator;

    // Closed-form right-hand side on the primary chart, independent of the
    // generic solve pipeline. Requires an on-constraint state.
    std::function<Dynamics(const State&)> oracle;

    // Random on-constraint state inside the chart validity box.
    std::function<State(std::mt19937_64&)> sample;

    std::shared_ptr<ReductionPair> reduction; // may be null

    std::vector<std::string> checks;

    bool is_linear() const { return static_cast<bool>(linear); }
};

std::vector<std::string> system_names();
bool known_system(const std::string& name);

// Builds a fully wired descriptor; unknown parameter names or unphysical
// values raise InvalidParameters.
SystemDescriptor build(const std::string& name,
                       const std::map<std::string, double>& overrides = {},
                       const FDConfig& fd = {});

Dynamics oracle_dynamics(const SystemDescriptor& desc, const State& s);

// Structure constants used across the systems.
Tensor3 so3_structure();        // [e1,e2] = e3 (cross product)
Tensor3 so3_body_frame_structure(); // [e2,e1] = e3 (body angular-velocity frame)
Tensor3 se2_structure_sleigh(); // frame order (omega, v1, v2)

// Rolling-ball observables on the full chart: x, y, q1, q2, q3, pi1..pi5.
std::map<std::string, Observable> ball_full_observables(const SystemDescriptor& desc);
// Reduced-chart observables: x, y, pi1..pi5 (primed).
std::map<std::string, Observable> ball_reduced_observables(const SystemDescriptor& desc);

// Charts named for the structure-equation suite, with point samplers.
struct NamedChart {
    std::string name;
    std::shared_ptr<const AlgebroidChart> chart;
    std::function<Vec(std::mt19937_64&)> sample_point;
};
std::vector<NamedChart> all_charts();

} // namespace systems
} // namespace almech

#endif
