#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "blowup/fit_analysis.hpp"

using namespace blowup;

namespace {

std::vector<TracePoint> parabola_trace(double a, double T, double dt, double t_end) {
    std::vector<TracePoint> out;
    for (double t = 0.0; t <= t_end; t += dt) out.push_back({t, a * (t - T) * (t - T)});
    return out;
}

double rel(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

struct Slice {
    std::vector<double> r, f;
};

Slice ellipse_slice(double a, double b, double k, double baseline) {
    Slice s;
    const RadialGrid g(10.0, 0.025);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g.r(i);
        const double u = r / a;
        const double top = u < 1.0 ? k + b * std::sqrt(1.0 - u * u) : k;
        s.r.push_back(r);
        s.f.push_back(std::max(top, baseline));
    }
    return s;
}

}  // namespace

TEST_CASE("origin fit recovers an exact parabola") {
    for (auto [a, T] : {std::pair{0.000025, 200.0}, {0.0000998, 100.2}, {0.00000157, 1599.3}}) {
        const double f0 = a * T * T;
        const auto fit = fit_origin_parabola(parabola_trace(a, T, T / 5000.0, 0.97 * T), f0);
        CHECK(rel(fit.a, a) < 1e-8);
        CHECK(rel(fit.T, T) < 1e-8);
        CHECK(fit.vertex_offset < 1e-8);
        CHECK(fit.rms_residual < 1e-12 * f0);
    }
}

TEST_CASE("origin fit only uses the lower part of the trace") {
    // Points above threshold * f0 are ignored, whatever they contain.
    auto trace = parabola_trace(0.000025, 200.0, 0.1, 190.0);
    for (auto& p : trace) {
        if (p.f > 0.5) p.f = 123.0;
    }
    const auto fit = fit_origin_parabola(trace, 1.0);
    CHECK(rel(fit.a, 0.000025) < 1e-8);
    CHECK(rel(fit.T, 200.0) < 1e-8);
}

TEST_CASE("origin fit errors") {
    std::vector<TracePoint> few{{0.0, 1.0}, {1.0, 0.4}, {2.0, 0.3}};
    CHECK_THROWS_AS(fit_origin_parabola(few, 1.0), InsufficientDataError);
    std::vector<TracePoint> cap;
    for (double t = 0.0; t < 10.0; t += 0.1) cap.push_back({t, 0.4 - 0.01 * (t - 5.0) * (t - 5.0)});
    CHECK_THROWS_AS(fit_origin_parabola(cap, 1.0), NonConvexTraceError);
}

TEST_CASE("origin fit tolerates noise") {
    std::mt19937 rng(2024);
    std::normal_distribution<double> noise(0.0, 1e-4);
    for (int rep = 0; rep < 20; ++rep) {
        auto trace = parabola_trace(0.000025, 200.0, 0.05, 195.0);
        for (auto& p : trace) p.f += noise(rng);
        const auto fit = fit_origin_parabola(trace, 1.0);
        CHECK(rel(fit.a, 0.000025) < 0.01);
        CHECK(rel(fit.T, 200.0) < 0.005);
    }
}

TEST_CASE("origin fit is covariant under rescaling") {
    const double a = 0.00005, T = 100.0, s = 2.0;
    auto trace = parabola_trace(a, T, 0.05, 97.0);
    std::mt19937 rng(3);
    std::normal_distribution<double> noise(0.0, 1e-4);
    for (auto& p : trace) p.f += noise(rng);
    const auto base = fit_origin_parabola(trace, 0.5);

    auto stretched = trace;
    for (auto& p : stretched) p.t *= s;
    const auto st = fit_origin_parabola(stretched, 0.5);
    CHECK(st.a == doctest::Approx(base.a / (s * s)).epsilon(1e-10));
    CHECK(st.T == doctest::Approx(base.T * s).epsilon(1e-10));

    auto tall = trace;
    for (auto& p : tall) p.f *= s;
    const auto ta = fit_origin_parabola(tall, 0.5 * s);
    CHECK(ta.a == doctest::Approx(base.a * s).epsilon(1e-10));
    CHECK(ta.T == doctest::Approx(base.T).epsilon(1e-10));
}

TEST_CASE("origin fit barely moves with the threshold") {
    std::mt19937 rng(17);
    std::normal_distribution<double> noise(0.0, 1e-5);
    auto trace = parabola_trace(0.000025, 200.0, 0.05, 195.0);
    for (auto& p : trace) p.f += noise(rng);
    const auto half = fit_origin_parabola(trace, 1.0, 0.5);
    const auto lower = fit_origin_parabola(trace, 1.0, 0.4);
    CHECK(rel(lower.a, half.a) < 0.005);
    CHECK(rel(lower.T, half.T) < 0.002);
}

TEST_CASE("ellipse fit recovers exact bumps") {
    struct Case {
        double a, b, k, baseline;
    };
    for (const auto& c : {Case{4.0, 0.04, 0.6, 0.6}, Case{8.0, 0.0016, 0.92, 0.92},
                          Case{6.0, 0.5, 0.9, 1.0}, Case{2.0, 0.01, 0.2, 0.2}}) {
        const auto s = ellipse_slice(c.a, c.b, c.k, c.baseline);
        const auto fit = fit_ellipse(s.r, s.f, c.baseline);
        CHECK(rel(fit.a_axis, c.a) < 1e-8);
        CHECK(rel(fit.b_axis, c.b) < 1e-8);
        CHECK(rel(fit.k_center, c.k) < 1e-8);
        CHECK(ellipse_upper(fit, 0.0) == doctest::Approx(c.k + c.b).epsilon(1e-8));
        CHECK(ellipse_upper(fit, 2.0 * c.a) == fit.k_center);
    }
}

TEST_CASE("ellipse fit rejects flat slices") {
    const auto s = ellipse_slice(4.0, 1e-6, 0.6, 0.6);
    CHECK_THROWS_AS(fit_ellipse(s.r, s.f, 0.6), InsufficientDataError);
    std::vector<double> r{0.0, 1.0}, f{1.0};
    CHECK_THROWS_AS(fit_ellipse(r, f, 1.0), InsufficientDataError);
}

TEST_CASE("profile parabola fit recovers exact data") {
    const RadialGrid g(10.0, 0.025);
    for (auto [p, h] : {std::pair{-1.25e-5, 0.9}, {-5e-5, 0.01}, {3.0, -2.0}}) {
        std::vector<double> f(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) f[i] = p * g.r(i) * g.r(i) + h;
        const auto fit = fit_profile_parabola(g.nodes(), f, 5.0);
        CHECK(rel(fit.p, p) < 1e-8);
        CHECK(rel(fit.h, h) < 1e-8);
        CHECK(fit.n_points == 201);
    }
    std::vector<double> f(g.size(), 1.0);
    CHECK_THROWS_AS(fit_profile_parabola(g.nodes(), f, 0.03), InsufficientDataError);
}

TEST_CASE("ellipse apex curvature equals the parabola law") {
    // Near r = 0, k + b sqrt(1 - r^2/a^2) ~ k + b - b r^2 / (2 a^2); for the
    // predicted shapes that curvature is exactly -v0^2 / (8 f0).
    for (auto [f0, v0] : {std::pair{1.0, -0.01}, {0.5, -0.02}, {4.0, -0.005}}) {
        for (double t : {20.0, 40.0, 80.0}) {
            const auto e = predicted_ellipse(f0, v0, t);
            CHECK(-e.b_axis / (2.0 * e.a_axis * e.a_axis) ==
                  doctest::Approx(ParabolicAnsatz::make(f0, v0).p).epsilon(1e-13));

            EllipseFit shape{e.a_axis, e.b_axis, e.k_center, 0.0, 0, 0};
            std::vector<double> r, f;
            for (double x = 0.0; x <= 0.05 * e.a_axis; x += 0.001 * e.a_axis) {
                r.push_back(x);
                f.push_back(ellipse_upper(shape, x));
            }
            const auto par = fit_profile_parabola(r, f, 0.05 * e.a_axis);
            CHECK(rel(par.p, -e.b_axis / (2.0 * e.a_axis * e.a_axis)) < 0.005);
        }
    }
    CHECK_THROWS_AS(predicted_ellipse(1.0, -0.01, 0.0), ConfigError);
}

TEST_CASE("comparison of an exact collapse") {
    // A record built from the closed-form profile must match its own prediction.
    RunRecord rec;
    rec.config.model = ModelKind::YangMills4p1;
    rec.config.profile = InitialProfile::Parabola;
    rec.config.boundary_outer = OuterBoundary::MatchParabola;
    rec.config.f0 = 1.0;
    rec.config.v0 = -0.02;
    rec.grid = make_grid(10.0, 0.025);
    const auto an = ParabolicAnsatz::make(1.0, -0.02);
    for (double t = 0.0; t < 0.97 * an.T; t += 0.01) rec.origin_trace.push_back({t, an.height(t)});
    for (double t : {10.0, 50.0, 90.0}) {
        Snapshot s{t, {}};
        for (double r : rec.grid->nodes()) s.values.push_back(an.value(r, t));
        rec.snapshots.push_back(s);
    }
    const auto report = compare_run(rec);
    REQUIRE(report.origin);
    CHECK(report.origin->rel_err_a < 1e-8);
    CHECK(report.origin->rel_err_T < 1e-8);
    CHECK(report.origin->max_overlay_deviation < 1e-12);
    REQUIRE(report.slices.size() == 3);
    for (const auto& s : report.slices) {
        REQUIRE(s.parabola);
        CHECK(rel(s.parabola->p, s.p_predicted) < 1e-8);
        CHECK(s.parabola->h == doctest::Approx(s.h_predicted).epsilon(1e-8));
    }
    CHECK(report.residuals.size() == 12);
}

TEST_CASE("stationary records carry no fit") {
    RunRecord rec;
    rec.config.v0 = 0.0;
    rec.grid = make_grid(10.0, 0.025);
    for (double t = 0.0; t < 1.0; t += 0.1) rec.origin_trace.push_back({t, 1.0});
    const auto report = compare_run(rec);
    CHECK_FALSE(report.origin);
    CHECK(report.origin_note == "stationary run: no geodesic prediction");
    CHECK(report.slices.empty());
}
