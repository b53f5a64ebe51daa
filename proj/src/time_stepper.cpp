#include "blowup/time_stepper.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace blowup {

std::string_view to_string(InitialProfile profile) noexcept {
    return profile == InitialProfile::Line ? "line" : "parabola";
}

std::string_view to_string(OuterBoundary boundary) noexcept {
    return boundary == OuterBoundary::MatchLine ? "match_line" : "match_parabola";
}

InitialProfile parse_profile(std::string_view name) {
    if (name == "line") return InitialProfile::Line;
    if (name == "parabola") return InitialProfile::Parabola;
    throw ConfigError(fmt::format("unknown profile '{}' (expected line or parabola)", name));
}

OuterBoundary parse_boundary(std::string_view name) {
    if (name == "match_line") return OuterBoundary::MatchLine;
    if (name == "match_parabola") return OuterBoundary::MatchParabola;
    throw ConfigError(
        fmt::format("unknown boundary_outer '{}' (expected match_line or match_parabola)", name));
}

std::string_view to_string(Termination termination) noexcept {
    switch (termination) {
        case Termination::ReachedStopFraction: return "reached_stop_fraction";
        case Termination::ReachedTMax: return "reached_t_max";
        case Termination::BlowUp: return "blow_up";
        case Termination::NumericalInstability: return "numerical_instability";
    }
    return "unknown";
}

OuterBoundary matching_boundary(InitialProfile profile) noexcept {
    return profile == InitialProfile::Line ? OuterBoundary::MatchLine : OuterBoundary::MatchParabola;
}

void RunConfig::validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!(f0 > 0.0) || !finite(f0)) throw ConfigError(fmt::format("f0: must be positive, got {}", f0));
    if (!(v0 <= 0.0) || !finite(v0)) {
        throw ConfigError(fmt::format("v0: must be negative (or zero for stationary data), got {}", v0));
    }
    if (!(dt > 0.0) || !finite(dt)) throw ConfigError(fmt::format("dt: must be positive, got {}", dt));
    if (!(dr > 0.0) || !finite(dr)) throw ConfigError(fmt::format("dr: must be positive, got {}", dr));
    if (dt > dr) throw ConfigError(fmt::format("dt: must not exceed dr ({} > {})", dt, dr));
    if (!(r_max > 0.0) || !finite(r_max)) {
        throw ConfigError(fmt::format("r_max: must be positive, got {}", r_max));
    }
    try {
        const RadialGrid grid(r_max, dr);
        if (grid.size() < 4) throw ConfigError("r_max: grid needs at least 4 nodes");
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("dr: {}", e.what()));
    }
    if (boundary_outer != matching_boundary(profile)) {
        throw ConfigError(fmt::format("boundary_outer: {} does not match profile {}",
                                      to_string(boundary_outer), to_string(profile)));
    }
    if (!(t_max > 0.0) || !finite(t_max)) {
        throw ConfigError(fmt::format("t_max: must be positive, got {}", t_max));
    }
    if (!(stop_fraction > 0.0 && stop_fraction < 1.0)) {
        throw ConfigError(fmt::format("stop_fraction: must lie in (0, 1), got {}", stop_fraction));
    }
    if (snapshot_stride < 1) {
        throw ConfigError(fmt::format("snapshot_stride: must be >= 1, got {}", snapshot_stride));
    }
    std::visit(
        [](const auto& policy) {
            using P = std::decay_t<decltype(policy)>;
            if constexpr (std::is_same_v<P, FixedIterations>) {
                if (policy.count < 1) throw ConfigError("corrector_max_iters: must be >= 1");
            } else {
                if (!(policy.tolerance > 0.0)) {
                    throw ConfigError("corrector_tolerance: must be positive");
                }
                if (policy.max_iterations < 1) throw ConfigError("corrector_max_iters: must be >= 1");
            }
        },
        corrector);
}

SimulationState init_state(const RunConfig& config) {
    config.validate();
    auto grid = make_grid(config.r_max, config.dr);

    RadialField current;
    if (config.profile == InitialProfile::Line) {
        current = RadialField(grid, config.f0);
    } else {
        const double p = -config.v0 * config.v0 / (8.0 * config.f0);
        current = RadialField::sample(grid, [&](double r) { return p * r * r + config.f0; });
    }

    RadialField previous = current;
    for (auto& v : previous.values()) v -= config.v0 * config.dt;
    return {std::move(previous), std::move(current), 0.0, 0};
}

void apply_boundaries(std::span<double> f, const RadialGrid& grid, OuterBoundary mode) {
    const std::size_t n = grid.size();
    if (n < 4 || f.size() != n) {
        throw ConfigError(fmt::format("boundaries need a field of >= 4 nodes matching the grid "
                                      "(field {}, grid {})",
                                      f.size(), n));
    }
    f[0] = (4.0 * f[1] - f[2]) / 3.0;
    switch (mode) {
        case OuterBoundary::MatchLine:
            f[n - 1] = f[n - 2];
            break;
        case OuterBoundary::MatchParabola: {
            const double ratio = grid.r(n - 1) / grid.r(n - 2);
            f[n - 1] = f[n - 2] + (f[n - 2] - f[n - 3]) * ratio;
            break;
        }
    }
}

RadialField apply_boundaries(RadialField field, OuterBoundary mode) {
    apply_boundaries(field.values(), field.grid(), mode);
    return field;
}

CorrectorOutcome correct(const SimulationState& state, const RunConfig& config, RadialField guess) {
    const RadialGrid& grid = state.f_curr.grid();
    const auto f = state.f_curr.values();
    const auto f_prev = state.f_prev.values();
    const std::size_t n = grid.size();
    const double dt = config.dt;
    const double dt2 = dt * dt;
    const double inv_2dt = 1.0 / (2.0 * dt);

    std::vector<NodeTerms> terms(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        terms[i] = node_terms(config.model, grid, f, i, config.scheme);
    }

    int max_passes = 0;
    double tolerance = -1.0;
    if (const auto* fixed = std::get_if<FixedIterations>(&config.corrector)) {
        max_passes = fixed->count;
    } else {
        const auto& tol = std::get<ToleranceIterations>(config.corrector);
        max_passes = tol.max_iterations;
        tolerance = tol.tolerance;
    }

    CorrectorOutcome outcome{std::move(guess), 0, 0.0};
    auto values = outcome.next.values();
    for (int pass = 0; pass < max_passes; ++pass) {
        double change = 0.0;
        const double old_first = values[0];
        const double old_last = values[n - 1];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double f_t = (values[i] - f_prev[i]) * inv_2dt;
            const double updated = 2.0 * f[i] - f_prev[i] + dt2 * acceleration(terms[i], f_t);
            change = std::max(change, std::abs(updated - values[i]));
            values[i] = updated;
        }
        apply_boundaries(values, grid, config.boundary_outer);
        change = std::max({change, std::abs(values[0] - old_first), std::abs(values[n - 1] - old_last)});

        outcome.iterations = pass + 1;
        outcome.last_change = change;
        if (!std::isfinite(change) || !outcome.next.all_finite()) {
            throw NumericalInstabilityError(
                fmt::format("non-finite field at t = {}", state.t + config.dt));
        }
        if (tolerance >= 0.0 && change <= tolerance) break;
    }
    return outcome;
}

namespace {

CorrectorOutcome predict_and_correct(const SimulationState& state, const RunConfig& config) {
    RadialField predicted = state.f_curr;
    auto pv = predicted.values();
    const auto fp = state.f_prev.values();
    for (std::size_t i = 0; i < pv.size(); ++i) pv[i] = 2.0 * pv[i] - fp[i];
    return correct(state, config, std::move(predicted));
}

// Field values at which the model's moduli description breaks down.
bool reached_blow_up_set(ModelKind model, const RadialField& f) {
    const RadialGrid& grid = f.grid();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double r = grid.r(i);
        if (model == ModelKind::YangMills4p1) {
            if (!(f[i] + r * r > 0.0)) return true;
        } else if (i > 0) {
            const double r2 = r * r;
            if (!(f[i] * f[i] + r2 * r2 > 0.0)) return true;
        }
    }
    return false;
}

}  // namespace

SimulationState step(const SimulationState& state, const RunConfig& config) {
    auto outcome = predict_and_correct(state, config);
    SimulationState next{state.f_curr, std::move(outcome.next), 0.0, state.step_index + 1};
    next.t = static_cast<double>(next.step_index) * config.dt;
    return next;
}

RunRecord run(const RunConfig& config, const StepObserver& observer) {
    RunRecord record;
    record.config = config;

    SimulationState state = init_state(config);
    record.grid = state.f_curr.grid_ptr();

    const auto expected_steps = static_cast<std::size_t>(std::ceil(config.t_max / config.dt)) + 1;
    record.origin_trace.reserve(std::min<std::size_t>(expected_steps, 20'000'000));

    auto commit = [&](const SimulationState& s) {
        record.origin_trace.push_back({s.t, s.f_curr[0]});
        if (s.step_index % config.snapshot_stride == 0) {
            record.snapshots.push_back({s.t, s.f_curr.data()});
        }
        if (observer) observer(s);
    };
    commit(state);

    // Half a step of slack so that accumulated rounding in t_max / dt cannot add a step.
    const double t_limit = config.t_max - 0.5 * config.dt;
    const double stop_height = config.stop_fraction * config.f0;
    int max_iters = 0;

    while (true) {
        if (config.v0 < 0.0 && state.f_curr[0] <= stop_height) {
            record.termination = Termination::ReachedStopFraction;
            break;
        }
        if (state.t >= t_limit) {
            record.termination = Termination::ReachedTMax;
            break;
        }
        try {
            auto outcome = predict_and_correct(state, config);
            max_iters = std::max(max_iters, outcome.iterations);

            state.f_prev = std::move(state.f_curr);
            state.f_curr = std::move(outcome.next);
            ++state.step_index;
            state.t = static_cast<double>(state.step_index) * config.dt;
        } catch (const SingularityError& e) {
            record.termination = Termination::BlowUp;
            record.message = e.what();
            break;
        } catch (const NumericalInstabilityError& e) {
            record.termination = Termination::NumericalInstability;
            record.message = e.what();
            break;
        }
        commit(state);
        if (reached_blow_up_set(config.model, state.f_curr)) {
            record.termination = Termination::BlowUp;
            record.message = fmt::format("field reached the singular set at t = {}", state.t);
            break;
        }
    }
    record.steps = state.step_index;
    record.max_corrector_iterations = max_iters;
    return record;
}

}  // namespace blowup
