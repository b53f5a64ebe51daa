#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace blowup {

/// Uniform radial mesh r_i = i * dr on [0, r_max].
///
/// Besides the node positions the grid owns the half-node weights of the
/// divergence-form operator r^-5 d/dr (r^5 d/dr), so the evolution loop never
/// recomputes fifth powers.
class RadialGrid {
public:
    /// Throws ConfigError unless r_max > 0, dr > 0 and r_max / dr is an
    /// integer to within 1e-9 relative.
    RadialGrid(double r_max, double dr);

    double r_max() const noexcept { return r_max_; }
    double dr() const noexcept { return dr_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    double r(std::size_t i) const noexcept { return nodes_[i]; }
    std::span<const double> nodes() const noexcept { return nodes_; }

    // (r_i + dr/2)^5 / (r_i^5 dr^2) and (r_i - dr/2)^5 / (r_i^5 dr^2); zero at i = 0.
    double outer_weight(std::size_t i) const noexcept { return outer_weight_[i]; }
    double inner_weight(std::size_t i) const noexcept { return inner_weight_[i]; }

    friend bool operator==(const RadialGrid& a, const RadialGrid& b) noexcept {
        return a.r_max_ == b.r_max_ && a.dr_ == b.dr_;
    }

private:
    double r_max_;
    double dr_;
    std::vector<double> nodes_;
    std::vector<double> outer_weight_;
    std::vector<double> inner_weight_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

GridPtr make_grid(double r_max, double dr);

/// Values of f(r_i) at one time level, tied to the grid they live on.
class RadialField {
public:
    RadialField() = default;
    /// Constant field.
    RadialField(GridPtr grid, double value);
    /// Throws ConfigError if values.size() != grid->size().
    RadialField(GridPtr grid, std::vector<double> values);

    template <class Fn>
    static RadialField sample(GridPtr grid, Fn&& fn) {
        std::vector<double> values(grid->size());
        for (std::size_t i = 0; i < values.size(); ++i) values[i] = fn(grid->r(i));
        return RadialField(std::move(grid), std::move(values));
    }

    const RadialGrid& grid() const noexcept { return *grid_; }
    const GridPtr& grid_ptr() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    const std::vector<double>& data() const noexcept { return values_; }

    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    bool all_finite() const noexcept;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

// Interior-node stencils. Each throws StencilError for i == 0 or i >= n - 1;
// nodes 0 and n - 1 belong to the boundary conditions.

/// (f_{i+1} - f_{i-1}) / (2 dr)
double centered_d1(const RadialGrid& grid, std::span<const double> f, std::size_t i);
/// (f_{i+1} + f_{i-1} - 2 f_i) / dr^2
double centered_d2(const RadialGrid& grid, std::span<const double> f, std::size_t i);
/// Divergence-form ("natural") differencing of f'' + 5 f' / r:
/// r^-5 [ (r + dr/2)^5 (f_{i+1} - f_i) - (r - dr/2)^5 (f_i - f_{i-1}) ] / dr^2.
/// Self-adjoint under the weight r^5 dr, so its spectrum is real and negative.
double natural_radial_operator(const RadialGrid& grid, std::span<const double> f, std::size_t i);
/// centered_d2 + 5 centered_d1 / r. Unstable near the origin; kept only as a
/// regression contrast for the natural scheme.
double naive_radial_operator(const RadialGrid& grid, std::span<const double> f, std::size_t i);

inline double centered_d1(const RadialField& f, std::size_t i) {
    return centered_d1(f.grid(), f.values(), i);
}
inline double centered_d2(const RadialField& f, std::size_t i) {
    return centered_d2(f.grid(), f.values(), i);
}
inline double natural_radial_operator(const RadialField& f, std::size_t i) {
    return natural_radial_operator(f.grid(), f.values(), i);
}
inline double naive_radial_operator(const RadialField& f, std::size_t i) {
    return naive_radial_operator(f.grid(), f.values(), i);
}

}  // namespace blowup
