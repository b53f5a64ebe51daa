#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "blowup/pde_models.hpp"
#include "blowup/radial_grid.hpp"

namespace blowup {

enum class InitialProfile { Line, Parabola };
enum class OuterBoundary { MatchLine, MatchParabola };

std::string_view to_string(InitialProfile profile) noexcept;
std::string_view to_string(OuterBoundary boundary) noexcept;
InitialProfile parse_profile(std::string_view name);
OuterBoundary parse_boundary(std::string_view name);

/// Exactly `count` corrector passes per step.
struct FixedIterations {
    int count = 3;
    friend bool operator==(const FixedIterations&, const FixedIterations&) = default;
};

/// Corrector passes until the largest nodal change is <= tolerance, at most max_iterations.
struct ToleranceIterations {
    double tolerance = 1e-12;
    int max_iterations = 8;
    friend bool operator==(const ToleranceIterations&, const ToleranceIterations&) = default;
};

using CorrectorPolicy = std::variant<FixedIterations, ToleranceIterations>;

struct RunConfig {
    ModelKind model = ModelKind::YangMills4p1;
    double f0 = 1.0;
    double v0 = -0.01;
    double dr = 0.025;
    double dt = 0.001;
    double r_max = 10.0;
    InitialProfile profile = InitialProfile::Line;
    OuterBoundary boundary_outer = OuterBoundary::MatchLine;
    double t_max = 240.0;
    double stop_fraction = 0.05;
    int snapshot_stride = 100;
    CorrectorPolicy corrector = ToleranceIterations{};
    RadialScheme scheme = RadialScheme::Natural;

    /// Throws ConfigError naming the first violated constraint. v0 == 0 is
    /// accepted so that stationary data can be evolved.
    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Boundary mode that goes with an initial profile.
OuterBoundary matching_boundary(InitialProfile profile) noexcept;

/// Two consecutive time levels plus the current time.
struct SimulationState {
    RadialField f_prev;
    RadialField f_curr;
    double t = 0.0;
    std::int64_t step_index = 0;
};

/// f(r, 0) from the profile; f_prev = f_curr - v0 dt so the first predictor
/// reproduces f(r, dt) = f(r, 0) + v0 dt.
SimulationState init_state(const RunConfig& config);

/// Overwrites node 0 with the even extrapolation (4 f_1 - f_2) / 3 and node
/// n - 1 according to the outer mode. Throws ConfigError for fewer than 4 nodes.
void apply_boundaries(std::span<double> f, const RadialGrid& grid, OuterBoundary mode);
RadialField apply_boundaries(RadialField field, OuterBoundary mode);

struct CorrectorOutcome {
    RadialField next;
    int iterations = 0;
    double last_change = 0.0;  // max-norm change of the final pass
};

/// Solves the implicit update
///   F = 2 f - f_prev + dt^2 A(f, (F - f_prev) / (2 dt))
/// by fixed-point iteration from `guess`, applying boundaries after every pass.
/// Throws SingularityError or NumericalInstabilityError.
CorrectorOutcome correct(const SimulationState& state, const RunConfig& config, RadialField guess);

/// Predictor 2 f - f_prev, corrector per config, then commit the new level.
SimulationState step(const SimulationState& state, const RunConfig& config);

enum class Termination { ReachedStopFraction, ReachedTMax, BlowUp, NumericalInstability };

std::string_view to_string(Termination termination) noexcept;

struct TracePoint {
    double t;
    double f;
};

struct Snapshot {
    double t;
    std::vector<double> values;
};

struct RunRecord {
    RunConfig config;
    GridPtr grid;
    std::vector<TracePoint> origin_trace;
    std::vector<Snapshot> snapshots;
    Termination termination = Termination::ReachedTMax;
    std::string message;
    std::int64_t steps = 0;
    int max_corrector_iterations = 0;
};

/// Called with every committed state, including the initial one.
using StepObserver = std::function<void(const SimulationState&)>;

/// Evolves until f(0, t) <= stop_fraction * f0, t >= t_max, or a numerical
/// failure. Failures end the run with the matching Termination; the record
/// always holds what was accumulated up to that point.
RunRecord run(const RunConfig& config, const StepObserver& observer = {});

}  // namespace blowup
