#include "blowup/radial_grid.hpp"

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "blowup/errors.hpp"

namespace blowup {

namespace {

void check_interior(const RadialGrid& grid, std::span<const double> f, std::size_t i) {
    if (f.size() != grid.size()) {
        throw StencilError(fmt::format("field has {} values, grid has {} nodes", f.size(), grid.size()));
    }
    if (i == 0 || i + 1 >= grid.size()) {
        throw StencilError(fmt::format("node {} is outside the interior stencil range [1, {}]", i,
                                       grid.size() >= 2 ? grid.size() - 2 : 0));
    }
}

double pow5(double x) {
    const double x2 = x * x;
    return x2 * x2 * x;
}

}  // namespace

RadialGrid::RadialGrid(double r_max, double dr) : r_max_(r_max), dr_(dr) {
    if (!(r_max > 0.0) || !std::isfinite(r_max)) {
        throw ConfigError(fmt::format("r_max must be positive, got {}", r_max));
    }
    if (!(dr > 0.0) || !std::isfinite(dr)) {
        throw ConfigError(fmt::format("dr must be positive, got {}", dr));
    }
    const double cells = r_max / dr;
    const double rounded = std::round(cells);
    if (rounded < 1.0 || std::abs(cells - rounded) > 1e-9 * cells) {
        throw ConfigError(fmt::format("r_max / dr = {} is not an integer", cells));
    }
    const auto n = static_cast<std::size_t>(rounded) + 1;
    nodes_.resize(n);
    outer_weight_.assign(n, 0.0);
    inner_weight_.assign(n, 0.0);
    const double inv_dr2 = 1.0 / (dr * dr);
    for (std::size_t i = 0; i < n; ++i) {
        nodes_[i] = static_cast<double>(i) * dr;
        if (i > 0) {
            // (r +- dr/2)^5 / r^5 = (1 +- 1/(2i))^5 exactly on a uniform grid.
            const double half_over_i = 0.5 / static_cast<double>(i);
            outer_weight_[i] = pow5(1.0 + half_over_i) * inv_dr2;
            inner_weight_[i] = pow5(1.0 - half_over_i) * inv_dr2;
        }
    }
}

GridPtr make_grid(double r_max, double dr) {
    return std::make_shared<const RadialGrid>(r_max, dr);
}

RadialField::RadialField(GridPtr grid, double value)
    : grid_(std::move(grid)), values_(grid_->size(), value) {}

RadialField::RadialField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw ConfigError("field constructed without a grid");
    if (values_.size() != grid_->size()) {
        throw ConfigError(fmt::format("field has {} values, grid has {} nodes", values_.size(),
                                      grid_->size()));
    }
}

bool RadialField::all_finite() const noexcept {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double centered_d1(const RadialGrid& grid, std::span<const double> f, std::size_t i) {
    check_interior(grid, f, i);
    return (f[i + 1] - f[i - 1]) / (2.0 * grid.dr());
}

double centered_d2(const RadialGrid& grid, std::span<const double> f, std::size_t i) {
    check_interior(grid, f, i);
    const double dr = grid.dr();
    return (f[i + 1] + f[i - 1] - 2.0 * f[i]) / (dr * dr);
}

double natural_radial_operator(const RadialGrid& grid, std::span<const double> f, std::size_t i) {
    check_interior(grid, f, i);
    return grid.outer_weight(i) * (f[i + 1] - f[i]) - grid.inner_weight(i) * (f[i] - f[i - 1]);
}

double naive_radial_operator(const RadialGrid& grid, std::span<const double> f, std::size_t i) {
    return centered_d2(grid, f, i) + 5.0 * centered_d1(grid, f, i) / grid.r(i);
}

}  // namespace blowup
