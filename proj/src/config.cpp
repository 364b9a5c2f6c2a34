#include "chemoscale/config.hpp"

#include <fstream>
#include <set>

namespace chemoscale {

using nlohmann::json;

namespace {

class Obj {
public:
    Obj(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
        if (!j_.is_object()) throw ConfigError(ctx_ + ": expected a JSON object");
    }

    template <class T>
    bool get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return false;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(ctx_ + "." + key + ": " + e.what());
        }
        return true;
    }

    const json* sub(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) throw ConfigError(ctx_ + ": unknown key '" + item.key() + "'");
    }

    void require_schema() {
        int v = -1;
        if (!get("schema_version", v)) throw ConfigError(ctx_ + ": missing schema_version");
        if (v != kConfigSchemaVersion)
            throw ConfigError(ctx_ + ": unsupported schema_version " + std::to_string(v));
    }

private:
    const json& j_;
    std::string ctx_;
    std::set<std::string> seen_;
};

GridPolicy parse_grid(const json* j, GridPolicy g) {
    if (!j) return g;
    Obj o(*j, "grid");
    o.get("n_core", g.n_core);
    o.get("n_far", g.n_far);
    o.get("r_max", g.r_max);
    o.finish();
    if (g.n_core == 0 || g.n_far == 0) throw ConfigError("grid: cell counts must be positive");
    if (g.r_max < 0.0) throw ConfigError("grid: r_max must be >= 0");
    return g;
}

}  // namespace

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    json* node = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override '" + assignment + "': empty key segment");
        if (!node->is_object()) {
            if (!node->is_null()) throw ConfigError("override '" + assignment + "': '" + part + "' is not an object");
            *node = json::object();
        }
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

json to_json(const Params& p) {
    return json{{"chi", p.chi}, {"eps", p.eps},     {"theta", p.theta}, {"gamma", p.gamma},
                {"L", p.L},     {"M0", p.M0},       {"kappa", p.kappa}, {"B", p.B},
                {"in_regime", p.in_regime()}};
}

json to_json(const GridPolicy& g) { return json{{"n_core", g.n_core}, {"n_far", g.n_far}, {"r_max", g.r_max}}; }

json to_json(const SweepConfig& c) {
    return json{{"schema_version", c.schema_version},
                {"L", c.L},
                {"gamma", c.gamma},
                {"eps", c.eps},
                {"M0", c.M0},
                {"M0_eps_over_gamma", c.M0_eps_over_gamma},
                {"theta", c.theta},
                {"B", c.B},
                {"grid", to_json(c.grid)},
                {"T_max", c.T_max},
                {"T_max_D", c.T_max_D},
                {"dt_max", c.dt_max},
                {"cfl", c.cfl},
                {"simulate_tau_d", c.simulate_tau_d},
                {"tau_d_C", c.tau_d_C},
                {"checks", c.checks},
                {"seed", c.seed}};
}

SimulateConfig parse_simulate_config(const json& j) {
    Obj o(j, "simulate");
    o.require_schema();
    SimulateConfig c;
    double gamma = 64.0, chi = 0.0, theta = 1.0, L = 10.0, M0 = 1e4, eps = 0.1, B = 100.0, R = 1.0, kappa = 1.0;
    o.get("gamma", gamma);
    const bool raw = o.get("chi", chi);
    o.get("theta", theta);
    o.get("L", L);
    o.get("M0", M0);
    o.get("eps", eps);
    o.get("B", B);
    o.get("R", R);
    o.get("kappa", kappa);
    if (raw && j.contains("gamma")) throw ConfigError("simulate: give gamma or chi, not both");
    if (!raw && (j.contains("R") || j.contains("kappa")))
        throw ConfigError("simulate: R and kappa only apply with raw chi");
    c.params = raw ? Params::from_raw(chi, eps, theta, L, M0, R, kappa, B)
                   : Params::normalized(gamma, theta, L, M0, eps, B);
    c.grid = parse_grid(o.sub("grid"), c.grid);
    o.get("T", c.options.T);
    o.get("dt_max", c.options.dt_max);
    o.get("cfl", c.options.cfl);
    o.get("frame_interval", c.options.frame_interval);
    double sf = 0.0;
    if (o.get("stop_fraction", sf)) c.options.stop_fraction = sf;
    o.get("stop_extra", c.options.stop_extra);
    o.get("seed", c.seed);
    o.get("baseline", c.baseline);
    o.finish();
    if (!(c.options.T > 0.0) || !(c.options.dt_max > 0.0) || !(c.options.cfl > 0.0) ||
        !(c.options.frame_interval > 0.0))
        throw ConfigError("simulate: T, dt_max, cfl, frame_interval must be positive");
    return c;
}

FokkerPlanckConfig parse_fokker_planck_config(const json& j) {
    Obj o(j, "fokker-planck");
    o.require_schema();
    FokkerPlanckConfig c;
    o.get("potential", c.potential);
    o.get("gamma", c.gamma);
    std::string init = "bump";
    o.get("initial", init);
    if (init == "bump") c.initial = InitialKind::Bump;
    else if (init == "stationary") c.initial = InitialKind::Stationary;
    else if (init == "indicator") c.initial = InitialKind::Indicator;
    else throw ConfigError("fokker-planck: initial must be bump, stationary or indicator");
    o.get("L", c.L);
    o.get("width", c.width);
    o.get("mass", c.mass);
    o.get("dual", c.dual);
    o.get("T", c.T);
    o.get("dt_max", c.dt_max);
    o.get("cfl", c.cfl);
    o.get("output_times", c.output_times);
    c.grid = parse_grid(o.sub("grid"), c.grid);
    o.finish();
    if (c.potential != "annulus" && c.potential != "zero")
        throw ConfigError("fokker-planck: potential must be annulus or zero");
    if (!(c.gamma > 0.0) || !(c.T > 0.0) || !(c.dt_max > 0.0) || !(c.cfl > 0.0) || !(c.L > 0.0) ||
        !(c.width > 0.0) || !(c.mass > 0.0))
        throw ConfigError("fokker-planck: gamma, T, dt_max, cfl, L, width, mass must be positive");
    if (!(c.grid.r_max > 0.0)) throw ConfigError("fokker-planck: grid.r_max must be positive");
    return c;
}

PoincareConfig parse_poincare_config(const json& j) {
    Obj o(j, "poincare");
    o.require_schema();
    PoincareConfig c;
    std::string w = "ground_state";
    o.get("weight", w);
    if (w == "ground_state") c.weight = WeightKind::GroundState;
    else if (w == "power") c.weight = WeightKind::Power;
    else throw ConfigError("poincare: weight must be ground_state or power");
    o.get("gammas", c.gammas);
    o.get("r_max", c.r_max);
    o.get("R", c.R);
    o.get("best_constant", c.best_constant);
    o.finish();
    if (c.gammas.empty()) throw ConfigError("poincare: gammas must be nonempty");
    for (double g : c.gammas)
        if (!(g > 2.0)) throw ConfigError("poincare: gammas must exceed 2");
    if (!(c.r_max > 2.0) || !(c.R > 1.0) || c.R > c.r_max) throw ConfigError("poincare: need 1 < R <= r_max, r_max > 2");
    return c;
}

SweepConfig parse_sweep_config(const json& j) {
    Obj o(j, "sweep");
    o.require_schema();
    SweepConfig c;
    o.get("L", c.L);
    o.get("gamma", c.gamma);
    o.get("eps", c.eps);
    o.get("M0", c.M0);
    o.get("M0_eps_over_gamma", c.M0_eps_over_gamma);
    if (j.contains("M0") && !j.contains("M0_eps_over_gamma")) c.M0_eps_over_gamma.clear();
    o.get("theta", c.theta);
    o.get("B", c.B);
    c.grid = parse_grid(o.sub("grid"), c.grid);
    o.get("T_max", c.T_max);
    o.get("T_max_D", c.T_max_D);
    o.get("dt_max", c.dt_max);
    o.get("cfl", c.cfl);
    o.get("simulate_tau_d", c.simulate_tau_d);
    o.get("tau_d_C", c.tau_d_C);
    o.get("checks", c.checks);
    o.get("seed", c.seed);
    o.get("workers", c.workers);
    o.get("max_runs", c.max_runs);
    o.finish();
    c.validate();
    return c;
}

VerifyConfig parse_verify_config(const json& j) {
    Obj o(j, "verify");
    o.require_schema();
    VerifyConfig c;
    o.get("criteria", c.criteria);
    o.finish();
    for (int id : c.criteria)
        if (id < 1 || id > 10) throw ConfigError("verify: criteria ids must be in 1..10");
    return c;
}

}  // namespace chemoscale
