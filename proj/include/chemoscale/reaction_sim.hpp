#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chemoscale/fokker_planck.hpp"
#include "chemoscale/potential_kernel.hpp"
#include "chemoscale/radial_grid.hpp"

namespace chemoscale {

/// Normalized parameters (kappa = 1, rho2 support radius 1).
struct Params {
    double chi = 64.0;
    double eps = 0.1;
    double theta = 1.0;
    double gamma = 64.0;  // chi * theta
    double L = 10.0;
    double M0 = 1e4;
    double kappa = 1.0;
    double B = 100.0;

    /// chi = gamma / theta.
    static Params normalized(double gamma, double theta, double L, double M0, double eps, double B = 100.0);
    /// Space-time rescaling x' = x/R, t' = t kappa/R^2.
    static Params from_raw(double chi, double eps, double theta, double L, double M0, double R, double kappa,
                           double B = 100.0);

    void validate() const;  // throws ConfigError
    bool reaction_flag() const { return M0 * eps / gamma >= B; }
    bool coupling_flag() const { return gamma >= B; }
    bool mass_flag() const { return M0 / theta >= B; }
    bool in_regime() const { return reaction_flag() && coupling_flag() && mass_flag(); }
};

struct CoupledState {
    double t = 0.0;
    RadialProfile rho1;
    RadialProfile rho2;
    std::vector<double> cum_rho1;  // int_0^t rho1 ds per cell
    double mass1 = 0.0;
    double mass2 = 0.0;
};

enum class HalfTimeMode { Chemotaxis, DiffusionOnly, SubsolutionOracle };
const char* to_string(HalfTimeMode m);

struct CoupledTrajectory {
    Params params;
    HalfTimeMode mode = HalfTimeMode::Chemotaxis;
    GridPtr grid;
    std::vector<CoupledState> frames;
    // dense (every step) mass history
    std::vector<double> t_series, mass1_series, mass2_series;
    std::size_t steps = 0;
    double max_budget_error = 0.0;  // |(m1 - m1(0)) - (m2 - m2(0))| / m2(0)
    bool support_hypothesis = true;  // rho1_0 supported in r >= L/2 (oracle)

    const CoupledState* frame_at(double t, double tol = 1e-9) const;
    /// Last frame with time <= t.
    const CoupledState& frame_before(double t) const;
};

struct CoupledOptions {
    double T = 100.0;
    double dt_max = 0.05;
    double cfl = 1.0;
    double dt_min = 1e-12;
    double frame_interval = 0.5;          // frames every interval (plus the end)
    std::optional<double> stop_fraction;  // stop once mass2 drop reaches fraction * pi theta ...
    double stop_extra = 0.0;              // ... plus this much time
};

/// Mollified shell of width 1 at radius L with mass M0 (center jittered by `seed`).
RadialProfile initial_rho1(GridPtr grid, const Params& p, std::uint64_t seed = 0);
/// theta * eta, eta = 1 on B1 with a smooth ramp to 0 on [1, 1 + 1/64].
RadialProfile initial_rho2(GridPtr grid, const Params& p);

/// Graded grid with r_max = max(40, 2L + 20) and far cells capped at 1/8.
GridPtr default_grid(const Params& p, std::size_t n_core = 256, std::size_t n_far = 256);

CoupledTrajectory coupled_solve(const Params& p, const RadialProfile& rho1_0, const RadialProfile& rho2_0,
                                const CoupledOptions& opt);
CoupledTrajectory diffusion_baseline_solve(const Params& p, const RadialProfile& rho1_0, const RadialProfile& rho2_0,
                                           const CoupledOptions& opt);

/// Heat flow for g1 by radial kernel convolution; g2 = rho2_0 exp(-eps int g1).
CoupledTrajectory subsolution_oracle(const Params& p, const RadialProfile& rho1_0, const RadialProfile& rho2_0,
                                     double T, double dt = 0.05, double frame_interval = 1.0);

/// Angular average of the 2D heat kernel between radii r and s at time t.
double radial_heat_kernel(double r, double s, double t);

struct HalfTimeReport {
    double tau = 0.0;
    double fraction = 0.5;
    bool reached = false;
    double t_end = 0.0;
    HalfTimeMode mode = HalfTimeMode::Chemotaxis;
    Params params;
};

HalfTimeReport half_time(const CoupledTrajectory& traj, double fraction = 0.5);

/// E1(x) = int_x^inf e^{-y}/y dy by adaptive quadrature.
double exp_integral_e1(double x);

/// Solves E1(C L^2 / tau) = 4 pi log 2 / (M0 eps) for tau.
double tau_d_lower_bound(const Params& p, double C = 0.25);

struct MassComparisonReport {
    std::size_t violations = 0;
    std::size_t frames_checked = 0;
    double worst_margin = 0.0;  // min over edges/frames of M1 - M_fp + rho2 mass/2
    double tol = 0.0;
    double worst_t = 0.0, worst_r = 0.0;
    bool ok() const { return violations == 0; }
};

/// Compares the coupled rho1 mass function with the frozen worst-case Fokker-Planck run up to t_max.
MassComparisonReport verify_mass_comparison(const CoupledTrajectory& traj, double t_max);

struct PassThroughReport {
    double t_end = 0.0;
    double min_cum = 0.0;  // min over r in (1/2, 1) of int_0^t_end rho1
    double c = 0.0;        // min_cum * gamma / M0
    double c_avg = 0.0;    // same with sliding averages over windows of width 1/gamma
    double depletion_max = 0.0;    // max over (1/2, 1) of rho2(t_end)/rho2(0)
    double depletion_bound = 0.0;  // exp(-eps c M0 / gamma)
};

PassThroughReport verify_pass_through(const CoupledTrajectory& traj, double t_end);

}  // namespace chemoscale
