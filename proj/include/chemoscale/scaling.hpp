#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chemoscale/fokker_planck.hpp"
#include "chemoscale/reaction_sim.hpp"

namespace chemoscale {

struct GridPolicy {
    std::size_t n_core = 256;
    std::size_t n_far = 256;
    double r_max = 0.0;  // 0: max(40, 2L + 20)
};

struct SweepConfig {
    int schema_version = 1;
    std::vector<double> L{10.0};
    std::vector<double> gamma{64.0};
    std::vector<double> eps{0.1};
    std::vector<double> M0;                  // either M0 ...
    std::vector<double> M0_eps_over_gamma{10.0};  // ... or M0 = ratio * gamma / eps
    double theta = 1.0;
    double B = 100.0;
    GridPolicy grid;
    double T_max = 400.0;     // cap for the chemotaxis run
    double T_max_D = 2000.0;  // cap for the baseline run
    double dt_max = 0.05;
    double cfl = 1.0;
    bool simulate_tau_d = true;
    double tau_d_C = 0.25;
    bool checks = true;  // mass comparison + pass-through
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::size_t max_runs = 512;

    void validate() const;
    std::vector<Params> tuples() const;
    /// Stable fingerprint of everything that affects results.
    std::string fingerprint() const;
};

struct SweepRecord {
    std::string run_id;
    double L = 0, gamma = 0, eps = 0, M0 = 0, theta = 0, chi = 0;
    double tau_C = NAN, tau_C_quarter = NAN, tau_D = NAN, tau_D_lb = NAN, t3_fitted = NAN;
    double passthrough_c = NAN;
    bool masscmp_ok = false;
    std::size_t grid_n = 0;
    double r_max = 0;
    std::string status = "ok";
};

/// One sweep tuple: chemotaxis run, baseline, bound and checks.
SweepRecord run_single(const Params& p, const SweepConfig& cfg, const std::string& run_id);

/// Runs all tuples (resuming from `store_dir` when given) in tuple order.
std::vector<SweepRecord> run_sweep(const SweepConfig& cfg, const std::optional<std::filesystem::path>& store_dir = {});

enum class Response { TauC, TauCQuarter, TauD };
enum class Axis { L, Gamma, LogM0Eps };
const char* to_string(Response r);
const char* to_string(Axis a);

struct ScalingFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
    std::string axis;
    std::vector<double> x, y;  // the fitted points (natural units)
};

/// Least squares of log y on log x.
ScalingFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, std::string axis = {});
/// Requires >= 3 distinct axis values with all other axes fixed.
ScalingFit fit_scaling(const std::vector<SweepRecord>& records, Response response, Axis axis);

extern const char* const kSweepCsvHeader;
void emit_csv(const std::vector<SweepRecord>& records, const std::filesystem::path& path);
std::vector<SweepRecord> parse_csv(const std::filesystem::path& path);
std::string format_record(const SweepRecord& r);
void emit_svg(const ScalingFit& fit, const std::filesystem::path& path, const std::string& title = {});

/// Frame CSV (t, r, value) plus a JSON manifest.
void write_fp_trajectory(const FPTrajectory& traj, const std::filesystem::path& dir, const std::string& scheme_note = {});
void write_coupled_trajectory(const CoupledTrajectory& traj, const std::filesystem::path& dir);

}  // namespace chemoscale
