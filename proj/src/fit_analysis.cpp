#include "blowup/fit_analysis.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace blowup {

namespace {

double rms(const Eigen::VectorXd& residual) {
    return residual.size() == 0 ? 0.0 : std::sqrt(residual.squaredNorm() / residual.size());
}

}  // namespace

ParabolaFit fit_origin_parabola(std::span<const TracePoint> trace, double f0, double threshold) {
    std::vector<TracePoint> window;
    for (const auto& p : trace) {
        if (p.f <= threshold * f0) window.push_back(p);
    }
    if (window.size() < 3) {
        throw InsufficientDataError(fmt::format(
            "origin trace has {} points at or below {} f0; need at least 3", window.size(), threshold));
    }

    // Fit in a centred, scaled time variable s = (t - mid) / half to keep the
    // normal matrix well conditioned over long traces.
    const auto [lo, hi] = std::minmax_element(window.begin(), window.end(),
                                              [](const auto& x, const auto& y) { return x.t < y.t; });
    const double mid = 0.5 * (lo->t + hi->t);
    const double half = std::max(0.5 * (hi->t - lo->t), 1e-300);

    const auto n = static_cast<Eigen::Index>(window.size());
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = (window[i].t - mid) / half;
        design(i, 0) = s * s;
        design(i, 1) = s;
        design(i, 2) = 1.0;
        rhs(i) = window[i].f;
    }
    const Eigen::Vector3d d = design.colPivHouseholderQr().solve(rhs);
    if (!(d(0) > 0.0)) {
        throw NonConvexTraceError(fmt::format("quadratic coefficient {} is not positive", d(0)));
    }

    ParabolaFit fit;
    fit.a = d(0) / (half * half);
    fit.T = mid - d(1) * half / (2.0 * d(0));
    fit.n_points = window.size();
    fit.rms_residual = rms(design * d - rhs);
    // c0 - a T^2 equals the fitted value at the vertex.
    const double vertex_value = d(2) - d(1) * d(1) / (4.0 * d(0));
    fit.vertex_offset = std::abs(vertex_value) / (fit.a * fit.T * fit.T);
    return fit;
}

EllipseFit fit_ellipse(std::span<const double> r, std::span<const double> f, double baseline,
                       double region_fraction) {
    if (r.size() != f.size()) {
        throw InsufficientDataError(fmt::format("{} radii for {} values", r.size(), f.size()));
    }
    double peak = 0.0;
    for (double v : f) peak = std::max(peak, std::abs(v - baseline));
    if (!(peak > 1e-3 * std::abs(baseline)) || peak == 0.0) {
        throw InsufficientDataError("slice does not deviate from its baseline");
    }

    std::size_t count = 0;
    while (count < f.size() && std::abs(f[count] - baseline) > region_fraction * peak) ++count;
    if (count < 3) {
        throw InsufficientDataError(fmt::format("bump region has {} nodes; need at least 3", count));
    }

    // Work in units of the bump extent and height.
    const double x_scale = std::max(r[count - 1], 1e-300);
    const double y_scale = peak;
    const auto n = static_cast<Eigen::Index>(count);
    Eigen::VectorXd x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i) = r[i] / x_scale;
        y(i) = (f[i] - baseline) / y_scale;
    }

    auto residual = [&](const Eigen::Vector3d& q) {
        const double a2 = q(0) * q(0);
        const double b2 = q(1) * q(1);
        return Eigen::VectorXd(x.array().square() / a2 + (y.array() - q(2)).square() / b2 - 1.0);
    };

    Eigen::Vector3d q(1.0, 1.0, 0.0);  // (a, b, k) in scaled units
    Eigen::VectorXd g = residual(q);
    double cost = g.squaredNorm();

    auto unscale = [&](const Eigen::Vector3d& v, const Eigen::VectorXd& res, int iters) {
        EllipseFit out;
        out.a_axis = std::abs(v(0)) * x_scale;
        out.b_axis = std::abs(v(1)) * y_scale;
        out.k_center = baseline + v(2) * y_scale;
        out.rms_residual = rms(res);
        out.n_points = count;
        out.iterations = iters;
        return out;
    };

    constexpr int kMaxIterations = 100;
    for (int iter = 1; iter <= kMaxIterations; ++iter) {
        Eigen::MatrixXd jac(n, 3);
        const double a = q(0), b = q(1), k = q(2);
        const Eigen::ArrayXd dy = y.array() - k;
        jac.col(0) = -2.0 * x.array().square() / (a * a * a);
        jac.col(1) = -2.0 * dy.square() / (b * b * b);
        jac.col(2) = -2.0 * dy / (b * b);
        const Eigen::Vector3d delta = jac.colPivHouseholderQr().solve(-g);

        // Backtrack until the cost decreases; a stationary point admits no decrease.
        double lambda = 1.0;
        bool improved = false;
        Eigen::Vector3d trial;
        Eigen::VectorXd trial_g;
        for (int halving = 0; halving < 40; ++halving, lambda *= 0.5) {
            trial = q + lambda * delta;
            if (!(trial(0) > 0.0 && trial(1) > 0.0)) continue;
            trial_g = residual(trial);
            if (trial_g.squaredNorm() < cost) {
                improved = true;
                break;
            }
        }
        if (!improved) return unscale(q, g, iter);

        const double step = (trial - q).cwiseAbs().maxCoeff();
        q = trial;
        g = trial_g;
        cost = g.squaredNorm();
        if (step <= 1e-12 * (1.0 + q.cwiseAbs().maxCoeff()) || cost <= 1e-30 * n) {
            return unscale(q, g, iter);
        }
    }
    throw FitFailureError(
        fmt::format("ellipse fit did not converge in {} Gauss-Newton iterations", kMaxIterations),
        unscale(q, g, kMaxIterations));
}

EllipseFit fit_ellipse(const RadialField& slice, double baseline, double region_fraction) {
    return fit_ellipse(slice.grid().nodes(), slice.values(), baseline, region_fraction);
}

double ellipse_upper(const EllipseFit& fit, double r) noexcept {
    const double u = r / fit.a_axis;
    if (std::abs(u) >= 1.0) return fit.k_center;
    return fit.k_center + fit.b_axis * std::sqrt(1.0 - u * u);
}

ProfileParabolaFit fit_profile_parabola(std::span<const double> r, std::span<const double> f,
                                        double r_window) {
    if (r.size() != f.size()) {
        throw InsufficientDataError(fmt::format("{} radii for {} values", r.size(), f.size()));
    }
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] <= r_window) nodes.push_back(i);
    }
    if (nodes.size() < 3) {
        throw InsufficientDataError(
            fmt::format("window r <= {} holds {} nodes; need at least 3", r_window, nodes.size()));
    }
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ri = r[nodes[i]];
        design(i, 0) = ri * ri;
        design(i, 1) = 1.0;
        rhs(i) = f[nodes[i]];
    }
    const auto qr = design.colPivHouseholderQr();
    if (qr.rank() < 2) throw InsufficientDataError("degenerate parabola window");
    const Eigen::Vector2d c = qr.solve(rhs);
    return {c(0), c(1), rms(design * c - rhs), nodes.size()};
}

ProfileParabolaFit fit_profile_parabola(const RadialField& slice, double r_window) {
    return fit_profile_parabola(slice.grid().nodes(), slice.values(), r_window);
}

EllipseShape predicted_ellipse(double f0, double v0, double t) {
    if (!(t > 0.0)) throw ConfigError(fmt::format("predicted ellipse needs t > 0, got {}", t));
    return {t, v0 * v0 * t * t / (4.0 * f0), f0 + v0 * t};
}

namespace {

std::optional<OriginComparison> compare_origin(const RunRecord& record, double threshold,
                                               std::string& note) {
    const auto& cfg = record.config;
    if (!(cfg.v0 < 0.0)) {
        note = "stationary run: no geodesic prediction";
        return std::nullopt;
    }
    try {
        OriginComparison cmp;
        cmp.fit = fit_origin_parabola(record.origin_trace, cfg.f0, threshold);
        cmp.prediction = geodesic_prediction(cfg.f0, cfg.v0);
        cmp.rel_err_a = std::abs(cmp.fit.a - cmp.prediction.a) / std::abs(cmp.prediction.a);
        cmp.rel_err_T = std::abs(cmp.fit.T - cmp.prediction.T) / std::abs(cmp.prediction.T);
        for (const auto& p : record.origin_trace) {
            if (p.f > threshold * cfg.f0) continue;
            const double tau = p.t - cmp.prediction.T;
            cmp.max_overlay_deviation =
                std::max(cmp.max_overlay_deviation, std::abs(p.f - cmp.prediction.a * tau * tau));
        }
        return cmp;
    } catch (const Error& e) {
        note = e.what();
        return std::nullopt;
    }
}

}  // namespace

ComparisonReport compare_run(const RunRecord& record, const ComparisonOptions& options) {
    ComparisonReport report;
    const auto& cfg = record.config;
    report.origin = compare_origin(record, options.threshold, report.origin_note);

    if (!(cfg.v0 < 0.0) || !record.grid) return report;

    const auto ansatz = ParabolicAnsatz::make(cfg.f0, cfg.v0);
    const double window = options.r_window > 0.0 ? options.r_window : 0.5 * cfg.r_max;
    const int stride = std::max(options.slice_stride, 1);
    const auto nodes = record.grid->nodes();

    for (std::size_t s = 0; s < record.snapshots.size(); s += static_cast<std::size_t>(stride)) {
        const auto& snap = record.snapshots[s];
        if (!(snap.t > 0.0)) continue;
        SliceComparison cmp;
        cmp.t = snap.t;
        cmp.p_predicted = ansatz.p;
        cmp.h_predicted = ansatz.height(snap.t);
        if (cfg.profile == InitialProfile::Line) {
            cmp.ellipse_predicted = predicted_ellipse(cfg.f0, cfg.v0, snap.t);
            if (snap.t >= cfg.r_max) {
                cmp.note = "bump has reached the outer boundary";
            } else {
                try {
                    cmp.ellipse = fit_ellipse(nodes, snap.values, snap.values.back());
                } catch (const Error& e) {
                    cmp.note = e.what();
                }
            }
        } else {
            try {
                cmp.parabola = fit_profile_parabola(nodes, snap.values, window);
            } catch (const Error& e) {
                cmp.note = e.what();
            }
        }
        report.slices.push_back(std::move(cmp));
    }

    for (double fraction : {0.2, 0.4, 0.6, 0.8}) {
        for (double r : {1.0, 2.5, 5.0}) {
            if (r > cfg.r_max) continue;
            const double t = fraction * ansatz.T;
            try {
                report.residuals.push_back({r, t, ansatz_residual(cfg.model, cfg.f0, cfg.v0, r, t)});
            } catch (const SingularityError&) {
            }
        }
    }
    return report;
}

}  // namespace blowup
