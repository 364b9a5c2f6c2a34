#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <doctest.h>

#include "chemoscale/reaction_sim.hpp"

using namespace chemoscale;
constexpr double pi = std::numbers::pi;

namespace {

Params small_params(double eps = 0.1) { return Params::normalized(16.0, 1.0, 4.0, 1e3, eps); }

CoupledOptions opts(double T, double frame = 0.25) {
    CoupledOptions o;
    o.T = T;
    o.frame_interval = frame;
    return o;
}

}  // namespace

TEST_CASE("parameter normalization and regime flags") {
    const auto p = Params::normalized(64.0, 2.0, 10.0, 1e6, 0.1);
    CHECK(p.chi == 32.0);
    CHECK(p.reaction_flag());
    CHECK(!p.coupling_flag());
    CHECK(p.mass_flag());
    CHECK(!p.in_regime());
    CHECK(Params::normalized(128.0, 1.0, 10.0, 2e5, 0.1).in_regime());

    const auto q = Params::from_raw(2.0, 0.5, 3.0, 20.0, 400.0, 2.0, 0.5);
    CHECK(q.chi == doctest::Approx(16.0));
    CHECK(q.eps == doctest::Approx(4.0));
    CHECK(q.gamma == doctest::Approx(48.0));
    CHECK(q.M0 == doctest::Approx(100.0));
    CHECK(q.L == doctest::Approx(10.0));
    CHECK(q.kappa == 1.0);

    CHECK_THROWS_AS(Params::normalized(64.0, 1.0, 10.0, 1e4, 0.0), ConfigError);
    CHECK_THROWS_AS(Params::normalized(64.0, 1.0, -1.0, 1e4, 0.1), ConfigError);
    CHECK_THROWS_AS(Params::from_raw(1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0), ConfigError);
    Params bad = p;
    bad.gamma = 10.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("initial data") {
    const auto p = small_params();
    const auto g = default_grid(p, 128, 128);
    const auto r1 = initial_rho1(g, p);
    CHECK(integrate(r1) == doctest::Approx(p.M0).epsilon(1e-12));
    for (std::size_t i = 0; i < g->size(); ++i)
        if (std::abs(g->center(i) - p.L) >= 0.5) CHECK(r1[i] == 0.0);
    const auto r2 = initial_rho2(g, p);
    CHECK(r2.max_value() == p.theta);
    CHECK(integrate(r2) == doctest::Approx(pi * p.theta).epsilon(0.05));
    const auto j = initial_rho1(g, p, 7);
    CHECK(integrate(j) == doctest::Approx(p.M0).epsilon(1e-12));
    CHECK(j.values()[0] == 0.0);
    auto q = p;
    q.L = 1.0;
    CHECK_THROWS_AS(initial_rho1(g, q), ConfigError);
}

TEST_CASE("exponential integral against boost") {
    CHECK(exp_integral_e1(1.0) == doctest::Approx(0.219383934395520).epsilon(1e-12));
    for (double x : {1e-6, 0.01, 0.5, 3.0, 20.0, 200.0})
        CHECK(exp_integral_e1(x) == doctest::Approx(boost::math::expint(1, x)).epsilon(1e-10));
    CHECK_THROWS_AS(exp_integral_e1(0.0), ConfigError);
}

TEST_CASE("diffusion lower bound inverts E1") {
    // choose M0 eps so that the right side is E1(1): then tau = C L^2
    const double rhs = boost::math::expint(1, 1.0);
    const double me = 4 * pi * std::log(2.0) / rhs;
    const auto p = Params::normalized(64.0, 1.0, 10.0, me / 0.1, 0.1);
    CHECK(tau_d_lower_bound(p, 0.25) == doctest::Approx(25.0).epsilon(1e-9));
    for (double m : {1e3, 1e4, 1e6}) {
        const auto q = Params::normalized(64.0, 1.0, 20.0, m, 0.1);
        const double tau = tau_d_lower_bound(q);
        CHECK(boost::math::expint(1, 0.25 * 400.0 / tau) ==
              doctest::Approx(4 * pi * std::log(2.0) / (m * 0.1)).epsilon(1e-9));
    }
    const auto a = Params::normalized(64.0, 1.0, 20.0, 1e4, 0.1), b = Params::normalized(64.0, 1.0, 20.0, 1e5, 0.1);
    CHECK(tau_d_lower_bound(b) < tau_d_lower_bound(a));
}

TEST_CASE("radial heat kernel") {
    for (double t : {0.1, 1.0, 7.0})
        for (double r : {0.0, 0.5, 3.0})
            CHECK(radial_heat_kernel(r, 0.0, t) == doctest::Approx(std::exp(-r * r / (4 * t)) / (4 * pi * t)));
    CHECK(radial_heat_kernel(2.0, 5.0, 0.7) == doctest::Approx(radial_heat_kernel(5.0, 2.0, 0.7)));
    // unit mass and angular average oracle
    for (double s : {0.0, 2.0, 40.0}) {
        const double t = 1.5;
        auto f = [&](double r) { return 2 * pi * r * radial_heat_kernel(r, s, t); };
        const double m = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, s + 40.0, 15, 1e-13);
        CHECK(m == doctest::Approx(1.0).epsilon(1e-9));
        auto ang = [&](double th) {
            const double d2 = 9.0 + s * s - 6.0 * s * std::cos(th);
            return std::exp(-d2 / (4 * t)) / (4 * pi * t) / (2 * pi);
        };
        CHECK(radial_heat_kernel(3.0, s, t) ==
              doctest::Approx(boost::math::quadrature::gauss_kronrod<double, 61>::integrate(ang, 0.0, 2 * pi, 15, 1e-14))
                  .epsilon(1e-9));
    }
}

TEST_CASE("well-mixed consumption matches the ODE half time") {
    // rho1 uniform and huge: rho2 decays like exp(-eps A t) in every cell
    const double A = 1e6, eps = 1e-6;
    const auto p = Params::normalized(16.0, 1.0, 4.0, A, eps);
    const auto g = build_graded_grid(10.0, 64, 64, 16.0);
    const RadialProfile r1(g, std::vector<double>(g->size(), A), ProfileKind::Density);
    const auto r2 = initial_rho2(g, p);
    auto o = opts(1.0);
    o.dt_max = 1e-3;
    const auto tr = diffusion_baseline_solve(p, r1, r2, o);
    const auto h = half_time(tr, 0.5);
    REQUIRE(h.reached);
    const double m20 = tr.mass2_series.front();
    const double expected = -std::log(1.0 - 0.5 * pi / m20) / (eps * A);
    CHECK(h.tau == doctest::Approx(expected).epsilon(1e-4));
    CHECK(h.mode == HalfTimeMode::DiffusionOnly);
    const auto q = half_time(tr, 0.25);
    CHECK(q.tau < h.tau);
    CHECK(half_time(tr, 0.0).tau == 0.0);
    CHECK_THROWS_AS(half_time(tr, -0.1), ConfigError);
}

TEST_CASE("coupled run: budget, exact depletion identity and negligible consumption limit") {
    const auto p = small_params();
    const auto g = default_grid(p, 128, 128);
    const auto r1 = initial_rho1(g, p), r2 = initial_rho2(g, p);
    const auto tr = coupled_solve(p, r1, r2, opts(2.0));
    CHECK(tr.max_budget_error < 1e-9);
    CHECK(tr.frames.back().t == doctest::Approx(2.0));
    for (const auto& fr : tr.frames) {
        CHECK(fr.mass1 - tr.frames[0].mass1 == doctest::Approx(fr.mass2 - tr.frames[0].mass2).epsilon(1e-9));
        for (std::size_t i = 0; i < g->size(); ++i)
            if (r2[i] > 0.0) CHECK(fr.rho2[i] == doctest::Approx(r2[i] * std::exp(-p.eps * fr.cum_rho1[i])).epsilon(1e-9));
    }
    const auto pt = verify_pass_through(tr, 2.0);
    CHECK(pt.depletion_max <= pt.depletion_bound * (1 + 1e-9));
    CHECK(pt.c_avg >= pt.c);
    CHECK_THROWS_AS(verify_pass_through(tr, 5.0), ConfigError);

    // eps -> 0: rho2 frozen, rho1 follows the frozen-potential Fokker-Planck flow
    const auto p0 = small_params(1e-14);
    const auto t0 = coupled_solve(p0, r1, r2, opts(1.0, 1.0));
    auto pot = std::make_shared<const DensityPotential>(r2, p0.chi);
    const auto fp = fp_solve(r1, pot, 1.0, 0.05);
    const auto& a = t0.frames.back().rho1;
    const auto& b = fp.frames.back().values;
    double diff = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
    CHECK(diff <= 1e-8 * b.max_value());
}

TEST_CASE("coupled solve rejects bad input") {
    const auto p = small_params();
    const auto g = default_grid(p, 64, 64);
    const auto g2 = build_graded_grid(50.0, 64, 64, p.gamma);
    CHECK_THROWS_AS(coupled_solve(p, initial_rho1(g, p), initial_rho2(g2, p), opts(1.0)), ConfigError);
    CHECK_THROWS_AS(coupled_solve(p, initial_rho1(g, p), initial_rho2(g, p), opts(0.0)), ConfigError);
}

TEST_CASE("heat-flow subsolution") {
    const auto p = small_params();
    const auto g = default_grid(p, 128, 128);
    const auto r1 = initial_rho1(g, p), r2 = initial_rho2(g, p);
    const auto sub = subsolution_oracle(p, r1, r2, 4.0, 0.0025, 1.0);
    CHECK(sub.support_hypothesis);
    CHECK(sub.mode == HalfTimeMode::SubsolutionOracle);
    // consumption only removes rho1, so rho2 stays above the heat-flow prediction;
    // the slack is the implicit Euler error while the front arrives
    double gap_coarse = 0.0, gap_fine = 0.0;
    for (double dt : {0.01, 0.0025}) {
        auto o = opts(4.0, 1.0);
        o.dt_max = dt;
        const auto base = diffusion_baseline_solve(p, r1, r2, o);
        double gap = 0.0;
        for (const auto& fr : sub.frames) {
            const auto* b = base.frame_at(fr.t);
            REQUIRE(b != nullptr);
            for (std::size_t i = 0; i < g->size(); ++i) gap = std::max(gap, fr.rho2[i] - b->rho2[i]);
            CHECK(fr.mass1 == doctest::Approx(p.M0).epsilon(1e-3));
            if (dt < 0.01) CHECK(b->mass2 >= fr.mass2);
        }
        (dt == 0.01 ? gap_coarse : gap_fine) = gap;
    }
    CHECK(gap_fine <= 2e-4 * p.theta);
    CHECK(gap_fine < 0.5 * gap_coarse);

    const auto inner = RadialProfile::sample(g, [](double r) { return r < 1.0 ? 1.0 : 0.0; }, ProfileKind::Density);
    CHECK(!subsolution_oracle(p, inner, r2, 0.1, 0.05, 0.1).support_hypothesis);
}

TEST_CASE("reference run respects the worst-case mass comparison") {
    const auto p = Params::normalized(64.0, 1.0, 10.0, 1e4, 0.1);
    const auto g = default_grid(p);
    CoupledOptions o = opts(100.0);
    o.stop_fraction = 0.5;
    o.stop_extra = 0.0;
    const auto tr = coupled_solve(p, initial_rho1(g, p), initial_rho2(g, p), o);
    const auto h = half_time(tr);
    REQUIRE(h.reached);
    CHECK(h.t_end == doctest::Approx(h.tau).epsilon(0.01));
    const auto rep = verify_mass_comparison(tr, h.tau);
    CHECK(rep.frames_checked > 0);
    CHECK(rep.ok());
}
