#include "blowup/pde_models.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace blowup {

std::string_view to_string(ModelKind model) noexcept {
    switch (model) {
        case ModelKind::YangMills4p1: return "yang_mills";
        case ModelKind::SigmaCharge2: return "sigma2";
    }
    return "unknown";
}

ModelKind parse_model(std::string_view name) {
    if (name == "yang_mills") return ModelKind::YangMills4p1;
    if (name == "sigma2") return ModelKind::SigmaCharge2;
    throw ConfigError(fmt::format("unknown model '{}' (expected yang_mills or sigma2)", name));
}

SingularityError::SingularityError(ModelKind model, double r, double f)
    : Error(fmt::format("{}: singular denominator at r = {}, f = {}", to_string(model), r, f)),
      model_(model),
      r_(r),
      f_(f) {}

GeodesicPrediction geodesic_prediction(double f0, double v0) {
    if (!(f0 > 0.0)) throw ConfigError(fmt::format("f0 must be positive, got {}", f0));
    if (!(v0 < 0.0)) throw ConfigError(fmt::format("v0 must be negative, got {}", v0));
    return {v0 * v0 / (4.0 * f0), 2.0 * f0 / std::abs(v0)};
}

ParabolicAnsatz ParabolicAnsatz::make(double f0, double v0) {
    const auto pred = geodesic_prediction(f0, v0);
    return {-v0 * v0 / (8.0 * f0), pred.a, pred.T, f0, v0};
}

double ansatz_value(double f0, double v0, double r, double t) {
    return ParabolicAnsatz::make(f0, v0).value(r, t);
}

namespace {

struct Derivatives {
    double first;
    double second;
};

// Central first and second differences, Richardson-extrapolated over (h, h/2).
// The step is halved until two successive extrapolations agree.
template <class Fn>
Derivatives richardson_derivatives(Fn&& g, double x, double h0) {
    const double g0 = g(x);
    auto central = [&](double h) {
        const double gp = g(x + h);
        const double gm = g(x - h);
        return Derivatives{(gp - gm) / (2.0 * h), (gp + gm - 2.0 * g0) / (h * h)};
    };
    auto extrapolate = [&](double h) {
        const Derivatives coarse = central(h);
        const Derivatives fine = central(0.5 * h);
        return Derivatives{(4.0 * fine.first - coarse.first) / 3.0,
                           (4.0 * fine.second - coarse.second) / 3.0};
    };

    double h = h0;
    Derivatives best = extrapolate(h);
    for (int k = 0; k < 12; ++k) {
        const Derivatives next = extrapolate(0.5 * h);
        const double scale1 = std::abs(next.first) + std::abs(g0) * 1e-12;
        const double scale2 = std::abs(next.second) + std::abs(g0) * 1e-12;
        const bool agree = std::abs(next.first - best.first) <= 1e-9 * scale1 &&
                           std::abs(next.second - best.second) <= 1e-9 * scale2;
        if (agree) return best;  // coarser step carries less rounding
        best = next;
        h *= 0.5;
    }
    return best;
}

double checked_denominator(ModelKind model, double r, double f, double denom) {
    if (!(denom > 0.0)) throw SingularityError(model, r, f);
    return denom;
}

}  // namespace

double ansatz_residual(ModelKind model, double f0, double v0, double r, double t) {
    const auto ansatz = ParabolicAnsatz::make(f0, v0);
    r = std::abs(r);

    const double f = ansatz.value(r, t);
    const auto in_time = richardson_derivatives([&](double s) { return ansatz.value(r, s); }, t,
                                                0.25 * ansatz.T);
    const auto in_space = richardson_derivatives([&](double s) { return ansatz.value(s, t); }, r,
                                                 std::max(1.0, 0.25 * r));

    const double f_t = in_time.first;
    const double f_tt = in_time.second;
    const double f_r = in_space.first;
    const double f_rr = in_space.second;
    // f'' + 5 f'/r tends to 6 f''(0) for an even profile.
    const double radial = r > 0.0 ? f_rr + 5.0 * f_r / r : 6.0 * f_rr;

    double rhs = 0.0;
    switch (model) {
        case ModelKind::YangMills4p1: {
            const double denom = checked_denominator(model, r, f, f + r * r);
            rhs = radial - 8.0 * r * f_r / denom + 2.0 * (f_t * f_t - f_r * f_r) / denom;
            break;
        }
        case ModelKind::SigmaCharge2: {
            const double r2 = r * r;
            const double denom = checked_denominator(model, r, f, f * f + r2 * r2);
            rhs = radial - 8.0 * r2 * r * f_r / denom + 2.0 * f * (f_t * f_t - f_r * f_r) / denom;
            break;
        }
    }
    return f_tt - rhs;
}

NodeTerms node_terms(ModelKind model, const RadialGrid& grid, std::span<const double> f,
                     std::size_t i, RadialScheme scheme) {
    const double radial = scheme == RadialScheme::Natural ? natural_radial_operator(grid, f, i)
                                                          : naive_radial_operator(grid, f, i);
    const double f_r = centered_d1(grid, f, i);
    const double r = grid.r(i);
    const double fi = f[i];
    switch (model) {
        case ModelKind::YangMills4p1: {
            const double denom = checked_denominator(model, r, fi, fi + r * r);
            return {radial - 8.0 * r * f_r / denom, 2.0 / denom, f_r * f_r};
        }
        case ModelKind::SigmaCharge2: {
            const double r2 = r * r;
            const double denom = checked_denominator(model, r, fi, fi * fi + r2 * r2);
            return {radial - 8.0 * r2 * r * f_r / denom, 2.0 * fi / denom, f_r * f_r};
        }
    }
    return {std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0};
}

double rhs_acceleration(ModelKind model, const RadialField& f, const RadialField& f_t,
                        std::size_t i) {
    if (f_t.size() != f.size()) {
        throw StencilError(fmt::format("f_t has {} values, f has {}", f_t.size(), f.size()));
    }
    return acceleration(node_terms(model, f.grid(), f.values(), i), f_t[i]);
}

}  // namespace blowup
