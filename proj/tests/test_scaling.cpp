#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "chemoscale/config.hpp"
#include "chemoscale/scaling.hpp"

using namespace chemoscale;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("chemoscale_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

SweepConfig cheap() {
    SweepConfig c;
    c.L = {2.5, 3.0};
    c.gamma = {12.0, 16.0};
    c.M0_eps_over_gamma = {10.0};
    c.grid.n_core = 32;
    c.grid.n_far = 32;
    c.grid.r_max = 12.0;
    c.simulate_tau_d = false;
    c.T_max = 40.0;
    return c;
}

SweepRecord rec(double L, double gamma, double M0, double tau) {
    SweepRecord r;
    r.L = L;
    r.gamma = gamma;
    r.eps = 0.1;
    r.M0 = M0;
    r.tau_C = tau;
    return r;
}

}  // namespace

TEST_CASE("log-log fit recovers exact power laws") {
    const auto f = fit_loglog({1, 2, 4, 8}, {3, 12, 48, 192});
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK_THROWS_AS(fit_loglog({1, 2}, {1, 2}), ConfigError);
    CHECK_THROWS_AS(fit_loglog({1, 2, 3}, {1, -2, 3}), ConfigError);
    CHECK_THROWS_AS(fit_loglog({2, 2, 2}, {1, 2, 3}), ConfigError);
}

TEST_CASE("fit with a lower-order correction") {
    std::vector<SweepRecord> rs;
    const double gamma = 64.0;
    for (double L : {20.0, 40.0, 80.0}) rs.push_back(rec(L, gamma, 100 * gamma, 7 * L * L / gamma + std::log(gamma)));
    const auto f = fit_scaling(rs, Response::TauC, Axis::L);
    CHECK(f.slope >= 1.9);
    CHECK(f.slope <= 2.0);
    CHECK(f.r2 > 0.99);

    // gamma axis with M0 eps / gamma held fixed
    std::vector<SweepRecord> g;
    for (double ga : {32.0, 64.0, 128.0}) g.push_back(rec(20.0, ga, 100 * ga, 400.0 / ga));
    CHECK(fit_scaling(g, Response::TauC, Axis::Gamma).slope == doctest::Approx(-1.0));

    rs.push_back(rec(20.0, 32.0, 3200, 1.0));
    CHECK_THROWS_AS(fit_scaling(rs, Response::TauC, Axis::L), ConfigError);
    CHECK_THROWS_AS(fit_scaling(rs, Response::TauD, Axis::L), ConfigError);
}

TEST_CASE("CSV emission and round trip") {
    const auto d = scratch("csv");
    emit_csv({}, d / "empty.csv");
    CHECK(slurp(d / "empty.csv") == std::string(kSweepCsvHeader) + "\n");
    CHECK(parse_csv(d / "empty.csv").empty());

    auto a = rec(10, 64, 6400, 1.25);
    a.run_id = "r0_x";
    a.tau_D = 7.5;
    a.masscmp_ok = true;
    a.grid_n = 123;
    a.r_max = 40;
    a.status = "tauD_not_reached,oops";
    auto b = rec(20, 32, 3200, NAN);
    b.run_id = "r1_y";
    emit_csv({a, b}, d / "two.csv");
    const auto back = parse_csv(d / "two.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[0].run_id == "r0_x");
    CHECK(back[0].tau_C == 1.25);
    CHECK(back[0].tau_D == 7.5);
    CHECK(back[0].masscmp_ok);
    CHECK(back[0].grid_n == 123);
    CHECK(back[0].status == "tauD_not_reached;oops");
    CHECK(std::isnan(back[1].tau_C));
    CHECK(format_record(back[0]) == format_record(parse_csv(d / "two.csv")[0]));

    std::ofstream(d / "bad.csv") << "nope\n";
    CHECK_THROWS(parse_csv(d / "bad.csv"));
}

TEST_CASE("SVG plot is well formed") {
    const auto d = scratch("svg");
    auto f = fit_loglog({10, 20, 40}, {1, 4.2, 15.8}, "L");
    emit_svg(f, d / "p.svg", "tau <C> & L");
    const auto s = slurp(d / "p.svg");
    CHECK(s.rfind("<?xml", 0) == 0);
    CHECK(s.find("<svg") != std::string::npos);
    CHECK(s.find("</svg>") != std::string::npos);
    CHECK(s.find("slope") != std::string::npos);
    CHECK(s.find("&lt;C&gt; &amp;") != std::string::npos);
    std::size_t circles = 0;
    for (std::size_t p = s.find("<circle"); p != std::string::npos; p = s.find("<circle", p + 1)) ++circles;
    CHECK(circles == 3);
}

TEST_CASE("sweep config validation and parsing") {
    SweepConfig c;
    CHECK_NOTHROW(c.validate());
    c.M0 = {1e4};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.M0_eps_over_gamma.clear();
    CHECK(c.tuples().front().M0 == 1e4);
    c.L = {};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    SweepConfig big;
    big.L.assign(30, 10.0);
    big.gamma.assign(30, 64.0);
    CHECK_THROWS_AS(big.validate(), ConfigError);

    nlohmann::json j = {{"schema_version", 1}, {"L", {10, 20}}, {"M0", {5000}}};
    const auto p = parse_sweep_config(j);
    CHECK(p.L.size() == 2);
    CHECK(p.M0_eps_over_gamma.empty());
    CHECK(p.tuples().size() == 2);
    j["bogus"] = 1;
    CHECK_THROWS_AS(parse_sweep_config(j), ConfigError);
    CHECK_THROWS_AS(parse_sweep_config({{"schema_version", 9}}), ConfigError);

    nlohmann::json o = {{"schema_version", 1}};
    apply_override(o, "grid.n_core=512");
    apply_override(o, "gamma=[32,64]");
    apply_override(o, "note=hello");
    CHECK(o["grid"]["n_core"] == 512);
    CHECK(o["gamma"].size() == 2);
    CHECK(o["note"] == "hello");
    CHECK_THROWS_AS(apply_override(o, "novalue"), ConfigError);
    CHECK(parse_sweep_config({{"schema_version", 1}, {"grid", {{"n_core", 64}}}}).grid.n_core == 64);
}

TEST_CASE("small sweep: rows, determinism, resume and agreement with a single run") {
    auto cfg = cheap();
    const auto d = scratch("sweep");
    const auto t0 = std::chrono::steady_clock::now();
    const auto recs = run_sweep(cfg, d / "store");
    const double first = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(recs.size() == 4);
    for (const auto& r : recs) {
        CHECK(r.status == "ok");
        CHECK(r.tau_C > 0.0);
        CHECK(r.tau_C_quarter <= r.tau_C);
        CHECK(r.M0 == doctest::Approx(10 * r.gamma / r.eps));
        CHECK(r.masscmp_ok);
    }
    CHECK(recs[0].L == 2.5);
    CHECK(recs[1].gamma == 16.0);
    CHECK(recs[2].L == 3.0);
    emit_csv(recs, d / "a.csv");
    CHECK(fs::exists(d / "store" / "manifest.json"));

    // fresh run is byte identical, also with more workers
    cfg.workers = 2;
    emit_csv(run_sweep(cfg), d / "b.csv");
    CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));

    // resume picks up stored rows
    cfg.workers = 1;
    const auto run0 = d / "store" / "runs" / (recs[0].run_id + ".csv");
    REQUIRE(fs::exists(run0));
    auto stored = parse_csv(run0);
    stored[0].status = "from_store";
    emit_csv(stored, run0);
    const auto t1 = std::chrono::steady_clock::now();
    const auto resumed = run_sweep(cfg, d / "store");
    const double second = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
    CHECK(resumed[0].status == "from_store");
    CHECK(format_record(resumed[1]) == format_record(recs[1]));
    CHECK(second < first);

    // a changed config invalidates the store
    cfg.T_max = 39.0;
    CHECK(run_sweep(cfg, d / "store")[0].status == "ok");

    // single tuple equals the direct coupled run
    const auto p = Params::normalized(16.0, 1.0, 3.0, 1600.0, 0.1);
    const auto g = build_graded_grid(12.0, 32, 32, p.gamma, 0.125);
    CoupledOptions o;
    o.T = 40.0;
    o.frame_interval = 0.25;
    o.stop_fraction = 0.5;
    o.stop_extra = 1.0;
    const auto tr = coupled_solve(p, initial_rho1(g, p), initial_rho2(g, p), o);
    CHECK(half_time(tr).tau == recs[3].tau_C);
}

TEST_CASE("trajectory writers") {
    const auto d = scratch("traj");
    const auto p = Params::normalized(16.0, 1.0, 3.0, 1600.0, 0.1);
    const auto g = build_graded_grid(12.0, 32, 32, p.gamma, 0.125);
    CoupledOptions o;
    o.T = 0.5;
    o.frame_interval = 0.25;
    const auto tr = coupled_solve(p, initial_rho1(g, p), initial_rho2(g, p), o);
    write_coupled_trajectory(tr, d / "c");
    for (const char* f : {"rho1.csv", "rho2.csv", "cum_rho1.csv", "series.csv", "manifest.json"})
        CHECK(fs::exists(d / "c" / f));
    const auto man = nlohmann::json::parse(slurp(d / "c" / "manifest.json"));
    CHECK(man.is_object());

    auto pot = std::make_shared<const AnnulusPotential>(16.0);
    const auto fp = fp_solve(initial_rho2(g, p), pot, 0.1, 0.05);
    write_fp_trajectory(fp, d / "f", "note");
    std::ifstream in(d / "f" / "frames.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,r,value");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == fp.frames.size() * g->size());
}
