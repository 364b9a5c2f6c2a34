#include <cmath>
#include <numbers>
#include <set>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include "chemoscale/poincare.hpp"

using namespace chemoscale;
constexpr double pi = std::numbers::pi;

namespace {

double gk(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-14);
}

// piecewise oracle so the kinks of w sit on panel ends
double gk_pieces(const std::function<double(double)>& f, std::vector<double> cuts) {
    double s = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) s += gk(f, cuts[i], cuts[i + 1]);
    return s;
}

}  // namespace

TEST_CASE("constant function has vanishing functionals") {
    const auto w = ground_state_weight(32.0);
    const auto grid = build_panel_grid(w, 50.0);
    const ModeProfile c(0, [](double) { return 2.0; });
    const auto b = mode_functionals(c, w, *grid);
    CHECK(b.I1 == 0.0);
    CHECK(b.I2 == 0.0);
    CHECK(b.I3 == 0.0);
    CHECK(b.J1 == 0.0);
    CHECK(std::abs(b.I_mean) < 1e-20);
    const auto k = block_constants(b, 32.0);
    CHECK(k.C1 == 0.0);
    CHECK(k.C2 == 0.0);
    CHECK(k.C3 == 0.0);
    CHECK(k.C_combined == 0.0);
}

TEST_CASE("Gaussian mode functionals against adaptive quadrature") {
    const double gamma = 64.0;
    const auto w = ground_state_weight(gamma);
    const auto grid = build_panel_grid(w, 60.0);
    const double c = 1.5, s = 0.7;
    auto g = [=](double r) { return std::exp(-(r - c) * (r - c) / (s * s)); };
    auto dg = [=](double r) { return -2 * (r - c) / (s * s) * g(r); };
    const double h0 = w.log_weight(0.0);
    auto wt = [&](double r) { return std::exp(w.log_weight(r) - h0); };
    const double r1 = w.r1(), r2 = w.r2();
    const std::vector<double> far_cuts{r2, 1.0, 2.0, 10.0, 60.0};

    for (int n : {0, 2}) {
        // higher modes carry r^n so the angular term stays integrable
        auto f = [=](double r) { return std::pow(r, n) * g(r); };
        auto df = [=](double r) { return (n ? n * std::pow(r, n - 1) : 0.0) * g(r) + std::pow(r, n) * dg(r); };
        const double fr1 = f(r1);
        const ModeProfile m(n, f);
        const auto b = mode_functionals(m, w, *grid);
        const double ang = n == 0 ? 2 * pi : pi;
        const double a = n == 0 ? fr1 : 0.0;
        auto dev = [&](double r) { return ang * (f(r) - a) * (f(r) - a) * wt(r) * r; };
        auto grad = [&](double r) { return ang * (df(r) * df(r) + (r > 0 ? n * n * f(r) * f(r) / (r * r) : 0.0)) * wt(r) * r; };
        const double I1 = gk(dev, 0, r1), J1 = gk(grad, 0, r1);
        const double I2 = gk(dev, r1, r2), J2 = gk(grad, r1, r2);
        const double I3 = gk_pieces(dev, far_cuts);
        const double J3 = gk_pieces([&](double r) { return grad(r) * r * r; }, far_cuts);
        CHECK(b.I1 == doctest::Approx(I1).epsilon(1e-8));
        CHECK(b.J1 == doctest::Approx(J1).epsilon(1e-8));
        CHECK(b.I2 == doctest::Approx(I2).epsilon(1e-8));
        CHECK(b.J2 == doctest::Approx(J2).epsilon(1e-8));
        CHECK(b.I3 == doctest::Approx(I3).epsilon(1e-8));
        CHECK(b.J3 == doctest::Approx(J3).epsilon(1e-8));
        // finite-difference derivative path agrees with the analytic one
        const auto ba = mode_functionals(ModeProfile(n, f, "g", df), w, *grid);
        CHECK(ba.J3 == doctest::Approx(b.J3).epsilon(1e-8));
    }
}

TEST_CASE("breakpoints must be grid edges") {
    const auto w = ground_state_weight(32.0);
    auto g = std::make_shared<const RadialGrid>(RadialGrid::uniform(10.0, 10));
    CHECK_THROWS_AS(mode_functionals(ModeProfile(0, [](double r) { return r; }), w, *g), ConfigError);
}

TEST_CASE("truncation limits") {
    const auto w = ground_state_weight(32.0);
    const double r_max = 40.0;
    const auto grid = build_panel_grid(w, r_max, {0.75 + 1e-3});
    const std::vector<ModeProfile> m{ModeProfile(0, [](double r) { return std::exp(-(r - 2) * (r - 2)); })};
    const auto full = mode_functionals(m, w, *grid, r_max);
    CHECK(full.I3R == full.I3);
    CHECK(full.J3R == full.J3);
    const auto thin = mode_functionals(m, w, *grid, 0.75 + 1e-3);
    CHECK(thin.I3R < 1e-2 * thin.I3);
    CHECK(thin.I3R <= thin.I3);
    CHECK(thin.J3R <= thin.J3);
    CHECK_THROWS_AS(verify_truncated(m, w, *grid, 0.7), ConfigError);
}

TEST_CASE("core-supported function reduces to a gamma-independent classical constant") {
    std::vector<double> c1;
    for (double gamma : {16.0, 32.0, 64.0, 128.0}) {
        const auto w = ground_state_weight(gamma);
        const auto grid = build_panel_grid(w, 20.0);
        const double r1 = w.r1();
        const ModeProfile m(0, [r1](double r) { return r < r1 ? std::pow(1 - r * r / (r1 * r1), 3) : 0.0; });
        const auto k = verify_block_inequalities({m}, w, *grid);
        c1.push_back(k.C1);
    }
    for (double v : c1) CHECK(v == doctest::Approx(c1.front()).epsilon(1e-6));
}

TEST_CASE("mean centering never exceeds plateau centering") {
    const auto w = ground_state_weight(64.0);
    const auto grid = build_panel_grid(w, 100.0);
    for (const auto& tf : battery_v1()) {
        const auto k = verify_combined(tf.modes, w, *grid);
        CHECK(k.centering_ok);
    }
}

TEST_CASE("power weight holds for a centered Gaussian") {
    const double gamma = 64.0;
    const std::vector<ModeProfile> m{ModeProfile(0, [](double r) { return std::exp(-r * r); })};
    const auto pgrid = build_panel_grid(power_weight(gamma), 100.0);
    const auto p = verify_power_weight(m, gamma, *pgrid);
    const auto w = ground_state_weight(gamma);
    const auto k = verify_combined(m, w, *build_panel_grid(w, 100.0));
    CHECK(p.C > 0.0);
    CHECK(p.C < 10 * k.C_combined);
    const std::vector<ModeProfile> c{ModeProfile(0, [](double) { return 1.0; })};
    CHECK(verify_power_weight(c, gamma, *pgrid).C == 0.0);
}

TEST_CASE("battery v1") {
    const auto b = battery_v1();
    CHECK(b.size() == 54);
    std::set<std::string> ids;
    for (const auto& t : b) ids.insert(t.id);
    CHECK(ids.size() == b.size());
    CHECK(std::string(kBatteryVersion) == "v1");
}

TEST_CASE("classical 1D Poincare constant") {
    std::vector<double> nodes;
    for (int i = 0; i <= 400; ++i) nodes.push_back(i / 400.0);
    auto one = [](double) { return 1.0; };
    const auto neu = best_constant_1d(nodes, one, one, nullptr, false, false, true);
    CHECK(neu.converged);
    CHECK(neu.value == doctest::Approx(1 / (pi * pi)).epsilon(0.01));
    const auto dir = best_constant_1d(nodes, one, one, nullptr, true, true, false);
    CHECK(dir.value == doctest::Approx(1 / (pi * pi)).epsilon(0.01));
    std::vector<double> n2;
    for (int i = 0; i <= 400; ++i) n2.push_back(3.0 * i / 400.0);
    const auto longer = best_constant_1d(n2, one, one, nullptr, false, false, true);
    CHECK(longer.value == doctest::Approx(9 / (pi * pi)).epsilon(0.01));
}

TEST_CASE("far extremum is radial and bounds the battery") {
    const double gamma = 32.0;
    const auto w = ground_state_weight(gamma);
    const auto grid = build_panel_grid(w, 200.0);
    const auto e0 = best_constant(w, *grid, Region::Far, 0);
    const auto e1 = best_constant(w, *grid, Region::Far, 1);
    CHECK(e0.converged);
    CHECK(e0.value > e1.value);
    // a far function vanishing at r2 cannot beat the extremal ratio
    const ModeProfile m(0, [](double r) { return r > 0.75 ? std::pow(r - 0.75, 2) * std::exp(-r) : 0.0; });
    const auto b = mode_functionals(m, w, *grid);
    CHECK(b.I3 / b.J3 <= e0.value * (1 + 1e-3));
    const auto core = best_constant(w, *grid, Region::Core, 0);
    CHECK(core.converged);
    CHECK(core.value > 0.0);
}
