#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "blowup/errors.hpp"
#include "blowup/radial_grid.hpp"

namespace blowup {

enum class ModelKind {
    YangMills4p1,  ///< charge-1 (4+1)-dimensional Yang-Mills, f = lambda^2-like scale
    SigmaCharge2,  ///< charge-2 (2+1)-dimensional S^2 sigma model, u = f / z^2
};

std::string_view to_string(ModelKind model) noexcept;
/// Accepts "yang_mills" and "sigma2"; throws ConfigError otherwise.
ModelKind parse_model(std::string_view name);

/// Which discretization of f'' + 5 f'/r enters the right-hand side.
enum class RadialScheme { Natural, NaiveCentered };

/// Raised when the model's denominator (f + r^2, or f^2 + r^4) vanishes:
/// the field has reached the blow-up set.
class SingularityError : public Error {
public:
    SingularityError(ModelKind model, double r, double f);
    ModelKind model() const noexcept { return model_; }
    double r() const noexcept { return r_; }
    double f() const noexcept { return f_; }

private:
    ModelKind model_;
    double r_;
    double f_;
};

/// Adiabatic prediction f(0, t) = a (t - T)^2 for initial height f0 and velocity v0.
struct GeodesicPrediction {
    double a;
    double T;
};

/// a = v0^2 / (4 f0), T = 2 f0 / |v0|. Throws ConfigError unless f0 > 0 and v0 < 0.
GeodesicPrediction geodesic_prediction(double f0, double v0);

/// Closed-form profile f(r, t) = p r^2 + a (t - T)^2 with p = -v0^2 / (8 f0).
struct ParabolicAnsatz {
    double p;
    double a;
    double T;
    double f0;
    double v0;

    static ParabolicAnsatz make(double f0, double v0);

    double height(double t) const noexcept { return a * (t - T) * (t - T); }
    double value(double r, double t) const noexcept { return p * r * r + height(t); }
};

double ansatz_value(double f0, double v0, double r, double t);

/// (d_tt f - RHS[f]) evaluated on the parabolic ansatz by Richardson-extrapolated
/// central differences of the closed form. Throws SingularityError at the
/// blow-up point.
double ansatz_residual(ModelKind model, double f0, double v0, double r, double t);

/// Time-derivative-independent parts of the right-hand side at one node.
/// The acceleration is spatial + kinetic_weight * (f_t^2 - f_r^2).
struct NodeTerms {
    double spatial;         // L f - (model gradient term)
    double kinetic_weight;  // 2 / (f + r^2)  or  2 f / (f^2 + r^4)
    double fr_squared;
};

NodeTerms node_terms(ModelKind model, const RadialGrid& grid, std::span<const double> f,
                     std::size_t i, RadialScheme scheme = RadialScheme::Natural);

inline double acceleration(const NodeTerms& terms, double f_t) noexcept {
    return terms.spatial + terms.kinetic_weight * (f_t * f_t - terms.fr_squared);
}

/// d_tt f at interior node i for the given model.
///   Yang-Mills: L f - 8 r f_r / (f + r^2)   + 2 (f_t^2 - f_r^2) / (f + r^2)
///   sigma:      L f - 8 r^3 f_r / (f^2 + r^4) + 2 f (f_t^2 - f_r^2) / (f^2 + r^4)
/// with L the natural radial operator and f_r the centered first difference.
double rhs_acceleration(ModelKind model, const RadialField& f, const RadialField& f_t,
                        std::size_t i);

}  // namespace blowup
