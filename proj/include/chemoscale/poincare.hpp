#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chemoscale/potential_kernel.hpp"
#include "chemoscale/radial_grid.hpp"

namespace chemoscale {

/// One angular mode f_n(r) cos(n theta) (or sin); n = 0 is the radial average.
struct ModeProfile {
    int n = 0;
    std::function<double(double)> value;
    std::function<double(double)> deriv;  // defaults to a finite-difference derivative of value
    std::string label;

    ModeProfile() = default;
    ModeProfile(int n, std::function<double(double)> value, std::string label = {},
                std::function<double(double)> deriv = {});
    double d(double r) const;
};

/// Block functionals, all scaled by exp(-log_scale).
struct BlockFunctionals {
    double I1 = 0, I2 = 0, I3 = 0;
    double J1 = 0, J2 = 0, J3 = 0;
    std::optional<double> R;
    double I3R = 0, J3R = 0;
    double I_mean = 0;  // int |f - fbar|^2 w
    double J_inner_far = 0;  // int_{B_{r2}} |grad f|^2 far_gradient_factor w
    double log_scale = 0;

    double I_tilde() const { return I1 + I2 + I3; }
    double I_R() const { return I1 + I2 + I3R; }
    BlockFunctionals& operator+=(const BlockFunctionals& o);
};

/// Panel grid carrying r1, r2, 1/sqrt2, 3/4, 1 and `extra` as exact edges.
GridPtr build_panel_grid(const WeightSpec& w, double r_max, const std::vector<double>& extra = {});

/// Per-mode functionals by cellwise Gauss-Legendre quadrature on `grid`.
BlockFunctionals mode_functionals(const ModeProfile& m, const WeightSpec& w, const RadialGrid& grid,
                                  std::optional<double> R = std::nullopt);
BlockFunctionals mode_functionals(const std::vector<ModeProfile>& modes, const WeightSpec& w,
                                  const RadialGrid& grid, std::optional<double> R = std::nullopt);

struct BlockConstants {
    double C1 = 0;        // I1 <= C J1
    double C2 = 0;        // I2 <= (C/g)(J1 + J2) + I1/4
    double C3 = 0;        // I3 <= (C/g^2)(J2 + J3) + I2/4
    double C_combined = 0;  // I_mean <= C (J1 + J2/g + J3/g^2)
    double C3R = 0;       // truncated I3
    double C_R = 0;       // I_R <= C (J1 + J2/g + J3R/g^2)
    bool centering_ok = true;  // I_mean <= I_tilde
    // margins of the 1/4 terms: I2 - I1/4 and I3 - I2/4 relative to the left side
    double margin2 = 0, margin3 = 0;
};

BlockConstants block_constants(const BlockFunctionals& b, double gamma);

BlockConstants verify_block_inequalities(const std::vector<ModeProfile>& modes, const WeightSpec& w,
                                         const RadialGrid& grid);
BlockConstants verify_combined(const std::vector<ModeProfile>& modes, const WeightSpec& w, const RadialGrid& grid);
BlockConstants verify_truncated(const std::vector<ModeProfile>& modes, const WeightSpec& w, const RadialGrid& grid,
                                double R);

struct PowerConstants {
    double C = 0;     // (C/g) int_{B1} |grad f|^2 v + (C/g^2) int_{B1^c} |grad f|^2 (1+r^2) v
    double C_bl = 0;  // (C/g) int |grad f|^2 (1+r^2) v
    double lhs = 0, j_in = 0, j_out = 0;
};

PowerConstants verify_power_weight(const std::vector<ModeProfile>& modes, double gamma, const RadialGrid& grid);

/// A battery test function: a sum of modes.
struct TestFunction {
    std::string id;
    std::vector<ModeProfile> modes;
};

inline constexpr const char* kBatteryVersion = "v1";

/// Gaussians (4 centers x 3 widths), mollified annuli and sinusoidal profiles, each in modes 0, 1, 2.
std::vector<TestFunction> battery_v1();

enum class Region { Core, Far };

struct EigenResult {
    double value = 0;  // sup of the Rayleigh quotient
    std::vector<double> nodes;
    std::vector<double> extremizer;
    std::size_t iterations = 0;
    double residual = 0;
    bool converged = false;
};

/// sup int f^2 m / int (f'^2 k + f^2 z) over P1 functions on `nodes`.
/// Dirichlet flags pin f = 0 at the ends; deflate removes m-weighted constants.
EigenResult best_constant_1d(const std::vector<double>& nodes, const std::function<double(double)>& m,
                             const std::function<double(double)>& k, const std::function<double(double)>& z,
                             bool dirichlet_left, bool dirichlet_right, bool deflate,
                             std::size_t max_iters = 200000, double tol = 1e-11);

/// Core: sup I1/J1 on [0, r1] (Neumann, constants removed).
/// Far: sup I3/J3 on [r2, grid r_max] with f(r2) = 0.
EigenResult best_constant(const WeightSpec& w, const RadialGrid& grid, Region region, int n = 0);

}  // namespace chemoscale
