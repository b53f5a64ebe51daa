#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/pde_models.hpp"
#include "blowup/radial_grid.hpp"
#include "blowup/time_stepper.hpp"

namespace blowup {

/// f(0, t) ~ a (t - T)^2 from an unconstrained quadratic least-squares fit.
struct ParabolaFit {
    double a = 0.0;
    double T = 0.0;
    double rms_residual = 0.0;
    std::size_t n_points = 0;
    // |c0 - a T^2| / (a T^2): how far the fitted vertex sits from f = 0.
    double vertex_offset = 0.0;
};

/// x^2 / a^2 + (y - k)^2 / b^2 = 1 with x = r, y = f(r).
struct EllipseFit {
    double a_axis = 0.0;
    double b_axis = 0.0;
    double k_center = 0.0;
    double rms_residual = 0.0;
    std::size_t n_points = 0;
    int iterations = 0;
};

/// f(r) ~ p r^2 + h.
struct ProfileParabolaFit {
    double p = 0.0;
    double h = 0.0;
    double rms_residual = 0.0;
    std::size_t n_points = 0;
};

/// Gauss-Newton did not converge; carries the last iterate.
class FitFailureError : public Error {
public:
    FitFailureError(const std::string& what, EllipseFit last) : Error(what), last_(last) {}
    const EllipseFit& last_iterate() const noexcept { return last_; }

private:
    EllipseFit last_;
};

/// Fits the part of the trace with f <= threshold * f0.
/// Throws InsufficientDataError (< 3 points) or NonConvexTraceError (c2 <= 0).
ParabolaFit fit_origin_parabola(std::span<const TracePoint> trace, double f0, double threshold = 0.5);

/// Share of the peak deviation below which nodes are left out of the bump region.
/// The scheme smears the bump edge over a few nodes past the light cone; those
/// nodes do not lie on any ellipse.
inline constexpr double kDefaultBumpFraction = 0.2;

/// Fits the bump region: the nodes contiguous from r = 0 where |f - baseline|
/// exceeds region_fraction of the peak deviation. Throws InsufficientDataError
/// when the peak deviation is below 1e-3 |baseline|, FitFailureError after 100
/// non-converged Gauss-Newton iterations.
EllipseFit fit_ellipse(std::span<const double> r, std::span<const double> f, double baseline,
                       double region_fraction = kDefaultBumpFraction);
EllipseFit fit_ellipse(const RadialField& slice, double baseline,
                       double region_fraction = kDefaultBumpFraction);

/// Upper branch of the ellipse, or k outside |r| < a.
double ellipse_upper(const EllipseFit& fit, double r) noexcept;

/// Ordinary least squares of f against (r^2, 1) over r <= r_window.
ProfileParabolaFit fit_profile_parabola(std::span<const double> r, std::span<const double> f,
                                        double r_window);
ProfileParabolaFit fit_profile_parabola(const RadialField& slice, double r_window);

struct EllipseShape {
    double a_axis;
    double b_axis;
    double k_center;
};

/// (t, v0^2 t^2 / (4 f0), f0 + v0 t).
EllipseShape predicted_ellipse(double f0, double v0, double t);

struct OriginComparison {
    ParabolaFit fit;
    GeodesicPrediction prediction;
    double rel_err_a = 0.0;
    double rel_err_T = 0.0;
    double max_overlay_deviation = 0.0;  // max |f(0,t) - a_pred (t - T_pred)^2| over the fit window
};

struct SliceComparison {
    double t = 0.0;
    std::optional<EllipseFit> ellipse;
    std::optional<EllipseShape> ellipse_predicted;
    std::optional<ProfileParabolaFit> parabola;
    double p_predicted = 0.0;
    double h_predicted = 0.0;
    std::string note;  // why a component is absent
};

struct ResidualSample {
    double r;
    double t;
    double residual;
};

struct ComparisonOptions {
    double threshold = 0.5;
    double r_window = -1.0;   // <= 0 selects r_max / 2
    int slice_stride = 1;     // analyze every n-th snapshot
};

struct ComparisonReport {
    std::optional<OriginComparison> origin;
    std::string origin_note;  // set when origin is absent
    std::vector<SliceComparison> slices;
    std::vector<ResidualSample> residuals;
};

/// Fits every component of a finished run against its adiabatic prediction.
/// Components that cannot be fitted are left empty with a note.
ComparisonReport compare_run(const RunRecord& record, const ComparisonOptions& options = {});

}  // namespace blowup
