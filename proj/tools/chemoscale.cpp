#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chemoscale/acceptance.hpp"
#include "chemoscale/config.hpp"
#include "chemoscale/fokker_planck.hpp"
#include "chemoscale/poincare.hpp"
#include "chemoscale/reaction_sim.hpp"
#include "chemoscale/scaling.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace chemoscale;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "JSON config file");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--set", c.sets, "override a config key, e.g. --set gamma=32 or --set grid.n_core=512");
}

json load(const Common& c) {
    json j = c.config.empty() ? json{{"schema_version", kConfigSchemaVersion}} : load_json_file(c.config);
    for (const auto& s : c.sets) apply_override(j, s);
    return j;
}

void write_json(const fs::path& p, const json& j) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << j.dump(2) << "\n";
}

json nan_safe(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

int cmd_simulate(const Common& c) {
    const auto cfg = parse_simulate_config(load(c));
    const auto& p = cfg.params;
    const GridPtr g = cfg.grid.r_max > 0.0 ? build_graded_grid(cfg.grid.r_max, cfg.grid.n_core, cfg.grid.n_far, p.gamma, 0.125)
                                           : default_grid(p, cfg.grid.n_core, cfg.grid.n_far);
    const auto rho1 = initial_rho1(g, p, cfg.seed);
    const auto rho2 = initial_rho2(g, p);
    const auto tr = cfg.baseline ? diffusion_baseline_solve(p, rho1, rho2, cfg.options)
                                 : coupled_solve(p, rho1, rho2, cfg.options);
    const auto h = half_time(tr, 0.5);
    const auto q = half_time(tr, 0.25);
    json s;
    s["params"] = to_json(p);
    s["mode"] = to_string(tr.mode);
    s["tau_half"] = h.reached ? json(h.tau) : json(nullptr);
    s["tau_quarter"] = q.reached ? json(q.tau) : json(nullptr);
    s["t_end"] = h.t_end;
    s["steps"] = tr.steps;
    s["grid_n"] = g->size();
    s["r_max"] = g->r_max();
    s["max_budget_error"] = tr.max_budget_error;
    std::printf("%s: tau(1/2) = %s, tau(1/4) = %s, steps = %zu\n", to_string(tr.mode),
                h.reached ? std::to_string(h.tau).c_str() : "not reached",
                q.reached ? std::to_string(q.tau).c_str() : "not reached", tr.steps);
    if (!c.out.empty()) {
        write_coupled_trajectory(tr, c.out);
        write_json(fs::path(c.out) / "summary.json", s);
    }
    return 0;
}

int cmd_fokker_planck(const Common& c) {
    const auto cfg = parse_fokker_planck_config(load(c));
    const auto g = build_graded_grid(cfg.grid.r_max, cfg.grid.n_core, cfg.grid.n_far, cfg.gamma);
    PotentialPtr pot = cfg.potential == "zero" ? PotentialPtr(std::make_shared<const ZeroPotential>())
                                               : PotentialPtr(std::make_shared<const AnnulusPotential>(cfg.gamma));
    const ProfileKind kind = cfg.dual ? ProfileKind::Field : ProfileKind::Density;
    std::vector<double> v;
    if (cfg.initial == InitialKind::Stationary) {
        const auto st = stationary_state(cfg.mass, *pot, g);
        v.assign(st.values().begin(), st.values().end());
    } else {
        for (double r : g->centers()) {
            if (cfg.initial == InitialKind::Indicator) {
                v.push_back(r <= cfg.L ? cfg.mass : 0.0);
            } else {
                const double x = (r - cfg.L) / cfg.width;
                v.push_back(std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0);
            }
        }
        if (cfg.initial == InitialKind::Bump) {
            double m = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) m += g->volume(i) * v[i];
            if (!(m > 0.0)) throw ConfigError("fokker-planck: bump not resolved by the grid");
            for (double& x : v) x *= cfg.mass / m;
        }
    }
    const RadialProfile u0(g, std::move(v), kind);
    FPOptions o;
    o.T = cfg.T;
    o.dt_max = cfg.dt_max;
    o.cfl = cfg.cfl;
    o.output_times = cfg.output_times;
    const auto tr = cfg.dual ? dual_solve(u0, pot, o) : fp_solve(u0, pot, o);
    const auto& last = tr.frames.back();
    std::printf("%s run: %zu steps, %zu frames; t=%g mass=%.12g sup=%.6g Z=%.6g W=%.6g\n",
                cfg.dual ? "dual" : "forward", tr.steps, tr.frames.size(), last.t, last.mass, last.sup, last.Z, last.W);
    if (!c.out.empty()) {
        char note[128];
        std::snprintf(note, sizeof note, "dt = min(%g, %g * min face delta^2/|Delta H|)", cfg.dt_max, cfg.cfl);
        write_fp_trajectory(tr, c.out, note);
    }
    return 0;
}

int cmd_poincare(const Common& c) {
    const auto cfg = parse_poincare_config(load(c));
    const auto battery = battery_v1();
    std::string csv = "gamma,weight,C1,C2,C3,C_combined,C3_R,C_R,C_power,C_power_bl,best_core,best_far,residual\n";
    for (double gamma : cfg.gammas) {
        const WeightSpec w(cfg.weight, gamma);
        const auto grid = build_panel_grid(w, cfg.r_max, {cfg.R});
        const auto pgrid = cfg.weight == WeightKind::Power ? grid : build_panel_grid(power_weight(gamma), cfg.r_max);
        BlockConstants m;
        PowerConstants pm;
        for (const auto& tf : battery) {
            const auto b = verify_truncated(tf.modes, w, *grid, cfg.R);
            const auto pc = verify_power_weight(tf.modes, gamma, *pgrid);
            m.C1 = std::max(m.C1, b.C1);
            m.C2 = std::max(m.C2, b.C2);
            m.C3 = std::max(m.C3, b.C3);
            m.C_combined = std::max(m.C_combined, b.C_combined);
            m.C3R = std::max(m.C3R, b.C3R);
            m.C_R = std::max(m.C_R, b.C_R);
            pm.C = std::max(pm.C, pc.C);
            pm.C_bl = std::max(pm.C_bl, pc.C_bl);
        }
        double core = NAN, far = NAN;
        if (cfg.best_constant) {
            core = best_constant(w, *grid, Region::Core).value;
            far = best_constant(w, *grid, Region::Far).value;
        }
        char row[512];
        std::snprintf(row, sizeof row, "%.10g,%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.3g\n",
                      gamma, cfg.weight == WeightKind::Power ? "power" : "ground_state", m.C1, m.C2, m.C3,
                      m.C_combined, m.C3R, m.C_R, pm.C, pm.C_bl, core, far, w.max_condition_residual());
        csv += row;
    }
    std::fputs(csv.c_str(), stdout);
    if (!c.out.empty()) {
        fs::create_directories(c.out);
        std::ofstream(fs::path(c.out) / "poincare.csv") << csv;
    }
    return 0;
}

int cmd_sweep(const Common& c) {
    const auto cfg = parse_sweep_config(load(c));
    std::optional<fs::path> store;
    if (!c.out.empty()) store = fs::path(c.out) / "store";
    const auto recs = run_sweep(cfg, store);
    if (c.out.empty()) {
        std::printf("%s\n", kSweepCsvHeader);
        for (const auto& r : recs) std::printf("%s\n", format_record(r).c_str());
        return 0;
    }
    const fs::path out(c.out);
    emit_csv(recs, out / "sweep.csv");
    json fits = json::array();
    const std::pair<Response, Axis> combos[] = {{Response::TauC, Axis::L},        {Response::TauC, Axis::Gamma},
                                                {Response::TauC, Axis::LogM0Eps}, {Response::TauD, Axis::L},
                                                {Response::TauCQuarter, Axis::L}};
    for (const auto& [resp, axis] : combos) {
        try {
            const auto f = fit_scaling(recs, resp, axis);
            const std::string name = std::string(to_string(resp)) + "_vs_" +
                                     (axis == Axis::L ? "L" : axis == Axis::Gamma ? "gamma" : "logM0eps");
            emit_svg(f, out / (name + ".svg"), name);
            fits.push_back({{"name", name}, {"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}});
        } catch (const ConfigError&) {
            // axis not varied with the others fixed
        }
    }
    write_json(out / "fits.json", fits);
    std::printf("%zu runs written to %s\n", recs.size(), (out / "sweep.csv").c_str());
    return 0;
}

int cmd_verify(const Common& c, const std::vector<int>& checks, unsigned workers) {
    auto cfg = parse_verify_config(load(c));
    if (!checks.empty()) cfg.criteria = checks;
    int failed = 0;
    std::string log;
    for (int id : cfg.criteria) {
        if (id < 1 || id > kCriterionCount) throw ConfigError("--check: criterion ids are 1..10");
        const auto r = run_criterion(id, workers);
        const auto line = format_result(r);
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
        log += line + "\n";
        if (!r.pass) ++failed;
    }
    if (!c.out.empty()) {
        fs::create_directories(c.out);
        std::ofstream(fs::path(c.out) / "verify.txt") << log;
    }
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radial chemotaxis-consumption solver, Poincare checks and scaling sweeps"};
    app.require_subcommand(1);
    Common c;
    std::vector<int> checks;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());

    auto* sim = app.add_subcommand("simulate", "coupled run (or diffusion baseline) from a JSON config");
    auto* fp = app.add_subcommand("fokker-planck", "forward or dual Fokker-Planck run");
    auto* poin = app.add_subcommand("poincare", "weighted Poincare constants over the test battery");
    auto* sweep = app.add_subcommand("sweep", "parameter sweep with CSV, fits and SVG plots");
    auto* ver = app.add_subcommand("verify", "acceptance criteria; nonzero exit on failure");
    for (auto* s : {sim, fp, poin, sweep, ver}) add_common(s, c);
    ver->add_option("--check", checks, "criterion id (1..10), repeatable");
    ver->add_option("--workers", workers, "threads for sweep-based criteria");

    CLI11_PARSE(app, argc, argv);
    try {
        if (sim->parsed()) return cmd_simulate(c);
        if (fp->parsed()) return cmd_fokker_planck(c);
        if (poin->parsed()) return cmd_poincare(c);
        if (sweep->parsed()) return cmd_sweep(c);
        if (ver->parsed()) return cmd_verify(c, checks, workers);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
