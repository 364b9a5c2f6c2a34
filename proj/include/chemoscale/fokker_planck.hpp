#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "chemoscale/potential_kernel.hpp"
#include "chemoscale/radial_grid.hpp"

namespace chemoscale {

/// B(x) = x / (e^x - 1), B(0) = 1.
double bernoulli(double x);

/// Exponentially fitted finite-volume operator for d/dt rho = div(grad rho - rho grad H).
///
/// V drho/dt = G rho with G column sums zero; the dual operator is G^T.
/// G diag(e^H) is symmetric, so cell-sampled e^H is the exact null vector.
class FPOperator {
public:
    FPOperator(GridPtr grid, std::vector<double> h_cells);
    FPOperator(GridPtr grid, const RadialPotential& pot);

    const RadialGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::span<const double> H() const { return h_; }

    /// out = G in (forward) or G^T in (dual).
    void apply(std::span<const double> in, std::span<double> out, bool dual) const;

    /// One implicit Euler step. `sink` (per cell, >= 0) adds -sink * u^{n+1} to the forward equation.
    void step(std::vector<double>& u, double dt, bool dual, std::span<const double> sink = {}) const;

    /// Accuracy step limit cfl * min over faces of delta^2 / |Delta H|; +inf for a flat potential.
    double cfl_dt(double cfl) const;

    /// Symmetric face weight: Delta H / (e^{-H_i} - e^{-H_{i+1}}).
    double face_omega(std::size_t f) const;
    /// 2 pi r_face / (c_{f+1} - c_f).
    double face_conductance(std::size_t f) const { return a_[f]; }

private:
    GridPtr grid_;
    std::vector<double> h_;
    std::vector<double> a_, bp_, bm_;
};

/// Solves a tridiagonal system in place (Thomas). lower[0] and upper[n-1] are ignored.
void solve_tridiagonal(std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
                       std::vector<double>& rhs);

struct FPOptions {
    double T = 1.0;
    double dt_max = 1e-2;
    double cfl = 1.0;
    double dt_min = 1e-12;
    bool fixed_step = false;          // dt = dt_max regardless of the potential
    bool record_every_step = false;   // keep every step as a frame
    std::vector<double> output_times; // frames at these times (T always added)
};

struct FPFrame {
    double t = 0.0;
    RadialProfile values;
    double mass = 0.0;  // int rho (forward) or int f e^H (dual)
    double sup = 0.0;
    double Z = 0.0;
    double W = 0.0;
};

struct FPTrajectory {
    bool dual = false;
    PotentialPtr potential;
    GridPtr grid;
    std::vector<double> H;
    std::vector<FPFrame> frames;
    std::size_t steps = 0;

    /// Frame at time t (within tol), or nullptr.
    const FPFrame* frame_at(double t, double tol = 1e-9) const;
};

FPTrajectory fp_solve(const RadialProfile& rho0, PotentialPtr pot, const FPOptions& opt);
FPTrajectory fp_solve(const RadialProfile& rho0, PotentialPtr pot, double T, double dt_max);
FPTrajectory dual_solve(const RadialProfile& f0, PotentialPtr pot, const FPOptions& opt);
FPTrajectory dual_solve(const RadialProfile& f0, PotentialPtr pot, double T, double dt_max);

/// e^H scaled to the requested mass on the grid.
RadialProfile stationary_state(double total_mass, const RadialPotential& pot, GridPtr grid);

/// int_{B_{r1}^c} e^H / int_{B_{r1}} e^H on the grid.
double stationary_tail_ratio(const RadialPotential& pot, const RadialGrid& grid, double r1 = kPlateauRadius);

struct ZW {
    double Z = 0.0;
    double W = 0.0;
};

/// Z = int (f - fbar)^2 e^H, W = int |grad f|^2 e^H; mode n >= 1 adds n^2/r^2 f^2 and skips centering.
ZW z_and_w(std::span<const double> f, const FPOperator& op, int n = 0);
ZW z_and_w(const RadialProfile& f, const RadialPotential& pot, int n = 0);

/// Max over s in [0, t] of |I(s) - I(0)| / (||rho0 - rho_s||_1 ||f0 - fbar||_inf),
/// I(s) = int (rho(s) - rho_s)(f(t - s) - fbar).
double duality_invariant(const FPTrajectory& rho_traj, const FPTrajectory& f_traj, double t);

struct MilestoneConstants {
    double c_t1 = 1.0;
    double c_t2 = 1.0;
    double c_t3 = 1.0;
    double c_q = 1.0;
};

struct MilestoneTimes {
    double sigma = 0.0;
    double gamma = 0.0;
    double t1 = 0.0, t2 = 0.0, t3 = 0.0;
    double Zsigma = 0.0, Q1 = 0.0, Q2 = 0.0;
    double mass = 0.0;        // ||rho0||_1
    double sup_weighted = 0.0; // ||rho0 e^{-H}||_inf
    MilestoneConstants constants;
};

MilestoneTimes milestone_times(const RadialProfile& rho0, const AnnulusPotential& pot, double sigma,
                               const MilestoneConstants& c = {});

struct DecayReport {
    double c_admissible = 0.0;    // largest c for which the bound holds on every frame past t1
    std::size_t frames_checked = 0;
    std::size_t frames_above_zsigma = 0;
    bool z_monotone = true;
    std::optional<double> t_reach_zsigma;
};

DecayReport verify_decay_bound(const FPTrajectory& traj, const MilestoneTimes& m);

struct LinftyReport {
    double C = 0.0;  // smallest admissible constant over the window
    double gamma = 0.0;
    std::vector<std::pair<double, double>> ratios;  // (t, ||rho||_inf / (max(1/t, gamma) ||rho0||_1))
};

LinftyReport verify_linfty(const FPTrajectory& traj, double t_lo = 0.0, double t_hi = HUGE_VAL);

struct FrontSample {
    double t = 0.0;
    double radius = 0.0;  // level crossing radius
    double c_radius = 0.0;
};

struct FrontReport {
    double c_level = 0.5;
    double c_radius = 0.0;      // min over frames in window
    double c_radius_max = 0.0;  // max over frames in window
    double d1 = 0.0;            // f0 >= 1 on B_{d1}
    double station_min = 0.0;   // min over all frames of f(station)
    std::vector<FrontSample> samples;
};

FrontReport transport_front(const FPTrajectory& f_traj, double gamma, double c_level = 0.5,
                            double t_lo = 1.0, double t_hi = HUGE_VAL, double station = 5.0 / 7.0);

/// Linear interpolation of cell values at radius r.
double interpolate_cells(const RadialProfile& p, double r);

std::pair<RadialProfile, RadialProfile> threshold_decompose(const RadialProfile& G, const RadialPotential& pot,
                                                            double alpha);

struct BallMassReport {
    bool precondition = false;  // Z <= A Zsigma
    double l1_dev = 0.0, l1_bound = 0.0;
    double mass_in = 0.0, mass_bound = 0.0;
    bool l1_holds = false, mass_holds = false;
};

BallMassReport mass_in_ball_from_Z(const RadialProfile& rho, const RadialPotential& pot, double r, double Z,
                                   double sigma, double A, double mass0, double tail_ratio);

}  // namespace chemoscale
