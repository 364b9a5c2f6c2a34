#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace chemoscale {

/// Thrown for invalid user-supplied parameters (grid sizes, couplings, configs).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical scheme detects a state it should never produce.
class SchemeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Radii that every graded grid carries as exact edges (kinks of the annulus potential).
inline constexpr double kPlateauRadius = 0.70710678118654752440;  // 1/sqrt(2)
inline constexpr double kShoulderRadius = 0.75;
inline constexpr double kUnitRadius = 1.0;

/// Radial mesh on [0, r_max] with the 2D polar measure baked into the cell volumes.
///
/// Cell i spans [edges[i], edges[i+1]]; its volume is pi (r_{i+1}^2 - r_i^2).
class RadialGrid {
public:
    explicit RadialGrid(std::vector<double> edges);

    /// Uniform spacing, no breakpoint insertion. Used for hand-checkable tests.
    static RadialGrid uniform(double r_max, std::size_t n_cells);

    std::size_t size() const { return centers_.size(); }
    double r_max() const { return edges_.back(); }

    std::span<const double> edges() const { return edges_; }
    std::span<const double> centers() const { return centers_; }
    std::span<const double> volumes() const { return volumes_; }

    double edge(std::size_t j) const { return edges_[j]; }
    double center(std::size_t i) const { return centers_[i]; }
    double volume(std::size_t i) const { return volumes_[i]; }
    double width(std::size_t i) const { return edges_[i + 1] - edges_[i]; }

    /// Index of the edge equal to r (within 1e-12 relative), or npos.
    std::size_t find_edge(double r) const;
    /// Index of the cell containing r (r in [edge_i, edge_{i+1})); last cell for r == r_max.
    std::size_t cell_of(double r) const;

    double total_volume() const;
    /// Largest cell width among cells lying inside [0, r].
    double max_width_below(double r) const;

    bool same_as(const RadialGrid& other) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::vector<double> edges_;
    std::vector<double> centers_;
    std::vector<double> volumes_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

/// Uniform core on [0, 2] (spacing <= min(2/n_core, 1/(4 gamma), 1/64)) with the breakpoints
/// 1/sqrt(2), 3/4 and 1 as exact edges, then geometric grading (ratio <= 1.05) out to r_max.
/// Far-field cells are additionally capped at `max_far_width` so that initial shells stay resolved.
GridPtr build_graded_grid(double r_max, std::size_t n_core, std::size_t n_far, double gamma,
                          double max_far_width = 0.25);

/// What a profile's values mean; fixes whether they live on cells or on edges.
enum class ProfileKind {
    Density,       // cell averages, nonnegative
    MassFunction,  // edge values M(r_j), M(0) = 0, nondecreasing
    Potential,     // cell-center values of H
    Field,         // unconstrained cell values (dual variable f, test functions)
    EdgeField,     // unconstrained edge values (drifts)
};

const char* to_string(ProfileKind kind);
bool lives_on_edges(ProfileKind kind);

class RadialProfile {
public:
    RadialProfile(GridPtr grid, std::vector<double> values, ProfileKind kind);

    /// Samples fn at centers (or edges, for edge kinds).
    template <class Fn>
    static RadialProfile sample(GridPtr grid, Fn&& fn, ProfileKind kind) {
        const auto pts = lives_on_edges(kind) ? grid->edges() : grid->centers();
        std::vector<double> v(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) v[i] = fn(pts[i]);
        return RadialProfile(std::move(grid), std::move(v), kind);
    }

    const RadialGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    ProfileKind kind() const { return kind_; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    double max_value() const;
    double min_value() const;

    /// Enforces the kind's invariants; throws SchemeError naming the first violation.
    void check_invariants() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
    ProfileKind kind_;
};

/// Tolerance below zero still accepted for densities: 1e-12 of the largest value.
double negativity_tolerance(std::span<const double> values);

double integrate(const RadialProfile& density);
RadialProfile to_mass_function(const RadialProfile& density);
RadialProfile from_mass_function(const RadialProfile& mass);

/// Mass of a density inside B_r for r an exact edge.
double mass_inside(const RadialProfile& density, double r);

}  // namespace chemoscale
