#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "blowup/fit_analysis.hpp"
#include "blowup/time_stepper.hpp"

using namespace blowup;

namespace {

double max_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

RunConfig small_config(ModelKind model) {
    RunConfig c;
    c.model = model;
    c.r_max = 5.0;
    c.dr = 0.05;
    c.dt = 0.01;
    c.f0 = 1.0;
    c.v0 = -0.05;
    c.t_max = 5.0;
    return c;
}

}  // namespace

TEST_CASE("line initial data") {
    RunConfig c;
    c.v0 = -0.02;
    const auto s = init_state(c);
    CHECK(s.f_curr.size() == 401);
    CHECK(s.t == 0.0);
    for (std::size_t i = 0; i < s.f_curr.size(); ++i) {
        CHECK(s.f_curr[i] == 1.0);
        CHECK(s.f_prev[i] == doctest::Approx(1.00002).epsilon(1e-14));
    }
}

TEST_CASE("parabola initial data") {
    RunConfig c;
    c.profile = InitialProfile::Parabola;
    c.boundary_outer = OuterBoundary::MatchParabola;
    c.v0 = -0.02;
    const auto s = init_state(c);
    CHECK(s.f_curr[0] == 1.0);
    CHECK(s.f_curr[400] == doctest::Approx(1.0 - 0.00005 * 100.0).epsilon(1e-14));
    CHECK(s.f_curr[200] - s.f_prev[200] == doctest::Approx(-0.02 * 0.001).epsilon(1e-9));
}

TEST_CASE("config validation") {
    RunConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.dt = 0.05;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.boundary_outer = OuterBoundary::MatchParabola;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.v0 = 0.01;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.stop_fraction = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.corrector = FixedIterations{0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.v0 = 0.0;
    CHECK_NOTHROW(bad.validate());
}

TEST_CASE("origin rule is exact for even quadratics") {
    auto g = make_grid(1.0, 0.1);
    auto f = RadialField::sample(g, [](double r) { return 2.0 - 3.0 * r * r; });
    f[0] = 99.0;
    f = apply_boundaries(f, OuterBoundary::MatchParabola);
    CHECK(f[0] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("outer rules") {
    auto g = make_grid(1.0, 0.1);
    auto line = RadialField::sample(g, [](double r) { return 1.0 + 0.5 * r; });
    line = apply_boundaries(line, OuterBoundary::MatchLine);
    CHECK(line[10] == line[9]);

    // For p r^2 the parabola rule misses by p dr^3 / r_{n-2}.
    const double p = -0.25, d = 0.1;
    auto par = RadialField::sample(g, [&](double r) { return 1.0 + p * r * r; });
    const double exact = par[10];
    par = apply_boundaries(par, OuterBoundary::MatchParabola);
    CHECK(par[10] - exact == doctest::Approx(-p * d * d * d / 0.9).epsilon(1e-9));

    CHECK_THROWS_AS(apply_boundaries(RadialField(make_grid(0.2, 0.1), 1.0), OuterBoundary::MatchLine),
                    ConfigError);
}

TEST_CASE("corrector converges to a unique fixed point") {
    for (auto model : {ModelKind::YangMills4p1, ModelKind::SigmaCharge2}) {
        auto c = small_config(model);
        auto s = init_state(c);
        for (int k = 0; k < 50; ++k) s = step(s, c);

        RadialField guess = s.f_curr;
        const auto a = correct(s, c, guess);
        const auto& tol = std::get<ToleranceIterations>(c.corrector);
        CHECK(a.last_change <= tol.tolerance);
        CHECK(a.iterations < tol.max_iterations);

        for (auto& v : guess.values()) v += 1e-6;
        const auto b = correct(s, c, guess);
        CHECK(max_diff(a.next.values(), b.next.values()) <= 1e-12);

        auto fixed = c;
        fixed.corrector = FixedIterations{2};
        CHECK(correct(s, fixed, s.f_curr).iterations == 2);
    }
}

TEST_CASE("flat data at rest stays put") {
    for (auto model : {ModelKind::YangMills4p1, ModelKind::SigmaCharge2}) {
        auto c = small_config(model);
        c.v0 = 0.0;
        c.t_max = 20.0;
        const auto rec = run(c);
        CHECK(rec.termination == Termination::ReachedTMax);
        CHECK(rec.steps == 2000);
        for (double v : rec.snapshots.back().values) CHECK(v == 1.0);
    }
}

TEST_CASE("evolution is reversible") {
    // The scheme is symmetric in time: swapping the two levels and stepping back
    // returns the initial data up to the corrector tolerance.
    for (auto model : {ModelKind::YangMills4p1, ModelKind::SigmaCharge2}) {
        auto c = small_config(model);
        auto s = init_state(c);
        const auto start = s;
        for (int k = 0; k < 300; ++k) s = step(s, c);
        CHECK(max_diff(s.f_curr.values(), start.f_curr.values()) > 1e-3);
        SimulationState back{s.f_curr, s.f_prev, 0.0, 0};
        for (int k = 0; k < 299; ++k) back = step(back, c);
        CHECK(max_diff(back.f_curr.values(), start.f_curr.values()) <= 1e-9);
        back = step(back, c);
        CHECK(max_diff(back.f_curr.values(), start.f_prev.values()) <= 1e-9);
    }
}

TEST_CASE("run bookkeeping") {
    auto c = small_config(ModelKind::YangMills4p1);
    c.snapshot_stride = 50;
    int calls = 0;
    const auto rec = run(c, [&](const SimulationState&) { ++calls; });
    CHECK(rec.termination == Termination::ReachedTMax);
    CHECK(rec.steps == 500);
    CHECK(calls == 501);
    CHECK(rec.origin_trace.size() == 501);
    CHECK(rec.snapshots.size() == 11);
    CHECK(rec.origin_trace.back().t == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(rec.snapshots[3].t == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("collapse runs stop at the requested fraction with a falling origin") {
    RunConfig c;
    c.model = ModelKind::SigmaCharge2;
    c.v0 = -0.04;
    c.t_max = 60.0;
    const auto rec = run(c);
    REQUIRE(rec.termination == Termination::ReachedStopFraction);
    CHECK(rec.origin_trace.back().f <= 0.05);
    CHECK(rec.origin_trace[rec.origin_trace.size() - 2].f > 0.05);
    for (std::size_t k = 1; k < rec.origin_trace.size(); ++k) {
        CHECK(rec.origin_trace[k].f < rec.origin_trace[k - 1].f);
    }
}

TEST_CASE("fitted collapse parameters are insensitive to halving dt") {
    RunConfig c;
    c.model = ModelKind::SigmaCharge2;
    c.v0 = -0.04;
    c.t_max = 60.0;
    c.snapshot_stride = 1000;
    const auto coarse = fit_origin_parabola(run(c).origin_trace, c.f0);
    c.dt = 0.0005;
    c.snapshot_stride = 2000;
    const auto fine = fit_origin_parabola(run(c).origin_trace, c.f0);
    CHECK(std::abs(coarse.a - fine.a) / fine.a < 0.005);
    CHECK(std::abs(coarse.T - fine.T) / fine.T < 0.005);
}

TEST_CASE("naive differencing amplifies a small seed") {
    auto c = small_config(ModelKind::YangMills4p1);
    c.v0 = 0.0;
    c.scheme = RadialScheme::NaiveCentered;
    auto s = init_state(c);
    s.f_curr[1] += 1e-12;
    s.f_prev[1] += 1e-12;
    double dev = 0.0;
    for (int k = 0; k < 2000 && std::isfinite(dev) && dev < 1.0; ++k) {
        try {
            s = step(s, c);
        } catch (const Error&) {
            dev = INFINITY;
            break;
        }
        for (double v : s.f_curr.values()) dev = std::max(dev, std::abs(v - 1.0));
    }
    CHECK(!(dev < 1e-11));
}
