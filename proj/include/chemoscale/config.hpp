#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "chemoscale/reaction_sim.hpp"
#include "chemoscale/scaling.hpp"

namespace chemoscale {

inline constexpr int kConfigSchemaVersion = 1;

/// Reads a JSON file; parse errors become ConfigError with the path.
nlohmann::json load_json_file(const std::filesystem::path& path);

/// Applies "a.b.c=value"; value is parsed as JSON, else taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

nlohmann::json to_json(const Params& p);
nlohmann::json to_json(const GridPolicy& g);
nlohmann::json to_json(const SweepConfig& c);

struct SimulateConfig {
    Params params;
    GridPolicy grid;
    CoupledOptions options;
    std::uint64_t seed = 0;
    bool baseline = false;
};

enum class InitialKind { Bump, Stationary, Indicator };

struct FokkerPlanckConfig {
    std::string potential = "annulus";  // annulus | zero
    double gamma = 32.0;
    InitialKind initial = InitialKind::Bump;
    double L = 5.0;       // bump center / indicator radius
    double width = 0.5;   // bump half-width
    double mass = 1.0;
    bool dual = false;
    double T = 1.0;
    double dt_max = 1e-2;
    double cfl = 1.0;
    std::vector<double> output_times;
    GridPolicy grid{256, 256, 40.0};
};

struct PoincareConfig {
    WeightKind weight = WeightKind::GroundState;
    std::vector<double> gammas{16, 32, 64, 128};
    double r_max = 200.0;
    double R = 20.0;  // truncation radius
    bool best_constant = true;
};

struct VerifyConfig {
    std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
};

SimulateConfig parse_simulate_config(const nlohmann::json& j);
FokkerPlanckConfig parse_fokker_planck_config(const nlohmann::json& j);
PoincareConfig parse_poincare_config(const nlohmann::json& j);
SweepConfig parse_sweep_config(const nlohmann::json& j);
VerifyConfig parse_verify_config(const nlohmann::json& j);

}  // namespace chemoscale
