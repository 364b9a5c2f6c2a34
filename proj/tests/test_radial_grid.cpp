#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include "chemoscale/radial_grid.hpp"

using namespace chemoscale;
constexpr double pi = std::numbers::pi;

TEST_CASE("uniform grid edges and annulus volumes") {
    const auto g = RadialGrid::uniform(2.0, 4);
    const double edges[] = {0, 0.5, 1, 1.5, 2};
    for (int j = 0; j < 5; ++j) CHECK(g.edge(j) == doctest::Approx(edges[j]));
    const double vol[] = {pi / 4, 3 * pi / 4, 5 * pi / 4, 7 * pi / 4};
    for (int i = 0; i < 4; ++i) CHECK(g.volume(i) == doctest::Approx(vol[i]).epsilon(1e-14));
}

TEST_CASE("graded grid core spacing and breakpoints") {
    const auto g = build_graded_grid(80.0, 512, 256, 64.0);
    CHECK(g->max_width_below(2.0) <= 1.0 / 256 + 1e-15);
    CHECK(g->find_edge(kPlateauRadius) != RadialGrid::npos);
    CHECK(g->find_edge(kShoulderRadius) != RadialGrid::npos);
    CHECK(g->find_edge(kUnitRadius) != RadialGrid::npos);
    CHECK(g->r_max() == 80.0);
    for (std::size_t i = 1; i < g->size(); ++i) CHECK(g->width(i) > 0.0);
}

TEST_CASE("total volume telescopes to pi r_max^2") {
    for (double r_max : {2.5, 10.0, 40.0, 123.0}) {
        const auto g = build_graded_grid(r_max, 128, 64, 16.0);
        CHECK(std::abs(g->total_volume() - pi * r_max * r_max) <= 1e-12 * pi * r_max * r_max);
    }
}

TEST_CASE("invalid grid inputs are rejected") {
    CHECK_THROWS_AS(build_graded_grid(-1.0, 16, 16, 4.0), ConfigError);
    CHECK_THROWS_AS(build_graded_grid(10.0, 0, 16, 4.0), ConfigError);
    CHECK_THROWS_AS(build_graded_grid(10.0, 16, 16, 0.0), ConfigError);
}

TEST_CASE("integrate exact cases") {
    auto g = std::make_shared<const RadialGrid>(RadialGrid::uniform(2.0, 40));
    const auto one = RadialProfile::sample(g, [](double) { return 1.0; }, ProfileKind::Density);
    CHECK(std::abs(integrate(one) - 4 * pi) <= 1e-12 * 4 * pi);
    const auto ind = RadialProfile::sample(g, [](double r) { return r < 1.0 ? 1.0 : 0.0; }, ProfileKind::Density);
    CHECK(std::abs(integrate(ind) - pi) <= 1e-12 * pi);
}

TEST_CASE("integrate Gaussian against quadrature oracle") {
    const auto g = build_graded_grid(10.0, 4096, 2048, 1.0, 1.0 / 256);
    const auto p = RadialProfile::sample(g, [](double r) { return std::exp(-r * r); }, ProfileKind::Density);
    // cell averages, not midpoint samples: compare the same quantity
    std::vector<double> avg(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double a = g->edge(i), b = g->edge(i + 1);
        avg[i] = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
                     [](double r) { return 2 * pi * r * std::exp(-r * r); }, a, b) /
                 g->volume(i);
    }
    const RadialProfile q(g, avg, ProfileKind::Density);
    const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [](double r) { return 2 * pi * r * std::exp(-r * r); }, 0.0, 10.0, 15, 1e-15);
    CHECK(std::abs(integrate(q) - oracle) <= 1e-8 * oracle);
    CHECK(std::abs(integrate(p) - pi * (1 - std::exp(-100.0))) <= 1e-5);
}

TEST_CASE("mass function of the unit disk indicator") {
    auto g = std::make_shared<const RadialGrid>(RadialGrid::uniform(3.0, 30));
    const auto ind = RadialProfile::sample(g, [](double r) { return r < 1.0 ? 1.0 : 0.0; }, ProfileKind::Density);
    const auto m = to_mass_function(ind);
    CHECK(m.kind() == ProfileKind::MassFunction);
    for (std::size_t j = 0; j < m.size(); ++j) {
        const double r = g->edge(j);
        CHECK(std::abs(m[j] - pi * std::min(r, 1.0) * std::min(r, 1.0)) <= 1e-12 * pi);
    }
    CHECK(mass_inside(ind, 2.0) == doctest::Approx(pi).epsilon(1e-12));
}

TEST_CASE("point-mass approximation jumps in the first cell") {
    auto g = std::make_shared<const RadialGrid>(RadialGrid::uniform(1.0, 10));
    std::vector<double> v(10, 0.0);
    v[0] = 5.0 / g->volume(0);
    const auto m = to_mass_function(RadialProfile(g, v, ProfileKind::Density));
    CHECK(m[0] == 0.0);
    for (std::size_t j = 1; j < m.size(); ++j) CHECK(m[j] == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("mass function round trip") {
    const auto g = build_graded_grid(20.0, 64, 64, 8.0);
    const auto p = RadialProfile::sample(
        g, [](double r) { return std::exp(-(r - 3) * (r - 3)) + 0.1 * std::exp(-r); }, ProfileKind::Density);
    const auto back = from_mass_function(to_mass_function(p));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(back[i] - p[i]) <= 1e-12 * p.max_value());
}

TEST_CASE("profile invariants") {
    auto g = std::make_shared<const RadialGrid>(RadialGrid::uniform(1.0, 4));
    CHECK_THROWS_AS(RadialProfile(g, {1, -1, 1, 1}, ProfileKind::Density).check_invariants(), SchemeError);
    CHECK_THROWS(RadialProfile(g, {1, 1, 1}, ProfileKind::Density));
    CHECK_THROWS_AS(from_mass_function(RadialProfile(g, {0, 1, 0.5, 2, 3}, ProfileKind::MassFunction)), ConfigError);
    CHECK_NOTHROW(RadialProfile(g, {0, 1, 2, 3, 4}, ProfileKind::EdgeField).check_invariants());
}
