#include "chemoscale/reaction_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace chemoscale {

namespace {
constexpr double kPi = std::numbers::pi;

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }
}  // namespace

Params Params::normalized(double gamma, double theta, double L, double M0, double eps, double B) {
    Params p;
    p.gamma = gamma;
    p.theta = theta;
    p.chi = gamma / theta;
    p.L = L;
    p.M0 = M0;
    p.eps = eps;
    p.B = B;
    p.validate();
    return p;
}

Params Params::from_raw(double chi, double eps, double theta, double L, double M0, double R, double kappa, double B) {
    if (!positive_finite(R) || !positive_finite(kappa)) throw ConfigError("Params: R and kappa must be positive");
    Params p;
    p.chi = chi * R * R / kappa;
    p.eps = eps * R * R / kappa;
    p.theta = theta;
    p.gamma = theta * p.chi;
    p.M0 = M0 / (R * R);
    p.L = L / R;
    p.kappa = 1.0;
    p.B = B;
    p.validate();
    return p;
}

void Params::validate() const {
    const double vals[] = {chi, eps, theta, gamma, L, M0, kappa, B};
    const char* names[] = {"chi", "eps", "theta", "gamma", "L", "M0", "kappa", "B"};
    for (std::size_t i = 0; i < 8; ++i)
        if (!positive_finite(vals[i])) throw ConfigError(std::string("Params: ") + names[i] + " must be positive");
    if (std::abs(gamma - chi * theta) > 1e-12 * gamma) throw ConfigError("Params: gamma must equal chi * theta");
}

const char* to_string(HalfTimeMode m) {
    switch (m) {
        case HalfTimeMode::Chemotaxis: return "Chemotaxis";
        case HalfTimeMode::DiffusionOnly: return "DiffusionOnly";
        case HalfTimeMode::SubsolutionOracle: return "SubsolutionOracle";
    }
    return "?";
}

const CoupledState* CoupledTrajectory::frame_at(double t, double tol) const {
    for (const auto& f : frames)
        if (std::abs(f.t - t) <= tol * std::max(1.0, std::abs(t))) return &f;
    return nullptr;
}

const CoupledState& CoupledTrajectory::frame_before(double t) const {
    if (frames.empty()) throw ConfigError("trajectory has no frames");
    const CoupledState* best = &frames.front();
    for (const auto& f : frames)
        if (f.t <= t * (1.0 + 1e-12)) best = &f;
    return *best;
}

RadialProfile initial_rho1(GridPtr grid, const Params& p, std::uint64_t seed) {
    if (p.L < 2.0) throw ConfigError("initial_rho1: L must be at least 2");
    double center = p.L;
    if (seed != 0) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-0.01, 0.01);
        center += u(rng);
    }
    if (center + 0.5 >= grid->r_max()) throw ConfigError("initial_rho1: shell does not fit inside r_max");
    auto v = RadialProfile::sample(
        grid,
        [center](double r) {
            const double x = (r - center) / 0.5;
            return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
        },
        ProfileKind::Density);
    const double m = integrate(v);
    if (!(m > 0.0)) throw ConfigError("initial_rho1: shell not resolved by the grid");
    for (double& x : v.mutable_values()) x *= p.M0 / m;
    return v;
}

RadialProfile initial_rho2(GridPtr grid, const Params& p) {
    const double width = 1.0 / 64.0;
    return RadialProfile::sample(
        grid,
        [&](double r) {
            if (r <= 1.0) return p.theta;
            if (r >= 1.0 + width) return 0.0;
            const double x = (r - 1.0) / width;
            return p.theta * 0.5 * (1.0 + std::cos(kPi * x));
        },
        ProfileKind::Density);
}

GridPtr default_grid(const Params& p, std::size_t n_core, std::size_t n_far) {
    const double r_max = std::max(40.0, 2.0 * p.L + 20.0);
    return build_graded_grid(r_max, n_core, n_far, p.gamma, 0.125);
}

namespace {

CoupledState make_state(double t, const std::vector<double>& r1, const std::vector<double>& r2,
                        const std::vector<double>& cum, const GridPtr& g) {
    CoupledState s{t, RadialProfile(g, r1, ProfileKind::Density), RadialProfile(g, r2, ProfileKind::Density), cum};
    s.mass1 = integrate(s.rho1);
    s.mass2 = integrate(s.rho2);
    return s;
}

CoupledTrajectory run_coupled(const Params& p, const RadialProfile& rho1_0, const RadialProfile& rho2_0,
                              const CoupledOptions& opt, bool chemotaxis) {
    p.validate();
    if (!rho1_0.grid().same_as(rho2_0.grid())) throw ConfigError("coupled_solve: rho1 and rho2 grids differ");
    if (!(opt.T > 0.0) || !(opt.dt_max > 0.0) || !(opt.frame_interval > 0.0))
        throw ConfigError("coupled_solve: T, dt_max and frame_interval must be positive");
    rho1_0.check_invariants();
    rho2_0.check_invariants();
    const GridPtr g = rho1_0.grid_ptr();
    const std::size_t n = g->size();
    const auto vol = g->volumes();

    CoupledTrajectory tr;
    tr.params = p;
    tr.mode = chemotaxis ? HalfTimeMode::Chemotaxis : HalfTimeMode::DiffusionOnly;
    tr.grid = g;

    std::vector<double> r1(rho1_0.values().begin(), rho1_0.values().end());
    std::vector<double> r2(rho2_0.values().begin(), rho2_0.values().end());
    std::vector<double> cum(n, 0.0), guess(n), u(n), sink(n), loss(n);
    tr.frames.push_back(make_state(0.0, r1, r2, cum, g));
    const double m1_0 = tr.frames[0].mass1, m2_0 = tr.frames[0].mass2;
    const double budget_scale = std::max(m1_0, m2_0);
    tr.t_series.push_back(0.0);
    tr.mass1_series.push_back(m1_0);
    tr.mass2_series.push_back(m2_0);

    std::optional<FPOperator> flat;
    if (!chemotaxis) flat.emplace(g, std::vector<double>(n, 0.0));

    double t = 0.0, t_end = opt.T;
    double next_frame = std::min(opt.frame_interval, t_end);
    bool stop_armed = false;
    const double threshold = opt.stop_fraction ? *opt.stop_fraction * kPi * p.theta : 0.0;

    while (t < t_end) {
        std::optional<FPOperator> local;
        if (chemotaxis) {
            DensityPotential pot(RadialProfile(g, r2, ProfileKind::Density), p.chi);
            local.emplace(g, sample_potential(pot, *g));
        }
        const FPOperator& op = chemotaxis ? *local : *flat;
        double dt = std::min(opt.dt_max, op.cfl_dt(opt.cfl));
        if (dt < opt.dt_min) {
            std::ostringstream os;
            os << "coupled_solve: CFL step " << dt << " below dt_min at t=" << t;
            throw SchemeError(os.str());
        }
        const double target = std::min(next_frame, t_end);
        const double rem = target - t;
        if (dt >= rem * (1.0 - 1e-9)) dt = rem;

        // fixed point on the implicit reaction sink
        guess = r1;
        for (int it = 0; it < 50; ++it) {
            for (std::size_t i = 0; i < n; ++i) {
                const double avg = 0.5 * (r1[i] + guess[i]);
                // loss r2 (1 - e^{-x}) written as dt * sink * guess without underflow
                const double x = p.eps * dt * avg;
                const double phi = x > 1e-300 ? -std::expm1(-x) / x : 1.0;
                sink[i] = guess[i] > 0.0 ? p.eps * r2[i] * phi * (avg / guess[i]) : p.eps * r2[i];
            }
            u = r1;
            op.step(u, dt, false, sink);
            double diff = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                diff = std::max(diff, std::abs(u[i] - guess[i]));
                scale = std::max(scale, std::abs(u[i]));
            }
            guess = u;
            if (diff <= 1e-14 * scale) break;
        }
        double mn = 0.0, mx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            loss[i] = dt * sink[i] * guess[i];
            cum[i] += dt * 0.5 * (r1[i] + guess[i]);
            r2[i] = std::max(0.0, r2[i] - loss[i]);
            r1[i] = guess[i];
            mn = std::min(mn, r1[i]);
            mx = std::max(mx, r1[i]);
        }
        if (mn < -1e-12 * mx) {
            std::ostringstream os;
            os << "coupled_solve: negative rho1 " << mn << " at t=" << t + dt;
            throw SchemeError(os.str());
        }
        t = (dt == rem) ? target : t + dt;
        ++tr.steps;

        double m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            m1 += vol[i] * r1[i];
            m2 += vol[i] * r2[i];
        }
        const double budget = std::abs((m1 - m1_0) - (m2 - m2_0)) / budget_scale;
        tr.max_budget_error = std::max(tr.max_budget_error, budget);
        if (budget > 1e-6) {
            std::ostringstream os;
            os << "coupled_solve: mass budget violated (" << budget << ") at t=" << t;
            throw SchemeError(os.str());
        }
        tr.t_series.push_back(t);
        tr.mass1_series.push_back(m1);
        tr.mass2_series.push_back(m2);

        if (opt.stop_fraction && !stop_armed && m2_0 - m2 >= threshold) {
            stop_armed = true;
            t_end = std::min(t_end, t + opt.stop_extra);
            next_frame = std::min(next_frame, t_end);
        }
        if (t >= target) {
            tr.frames.push_back(make_state(t, r1, r2, cum, g));
            next_frame = std::min(target + opt.frame_interval, t_end);
            if (next_frame <= t) next_frame = t_end;
        }
    }
    if (tr.frames.back().t < t) tr.frames.push_back(make_state(t, r1, r2, cum, g));
    return tr;
}

double i0e(double x) {
    if (x < 700.0) return std::cyl_bessel_i(0.0, x) * std::exp(-x);
    const double y = 1.0 / x;
    return (1.0 + y / 8.0 + 9.0 * y * y / 128.0 + 225.0 * y * y * y / 3072.0) / std::sqrt(2.0 * kPi * x);
}

}  // namespace

CoupledTrajectory coupled_solve(const Params& p, const RadialProfile& rho1_0, const RadialProfile& rho2_0,
                                const CoupledOptions& opt) {
    return run_coupled(p, rho1_0, rho2_0, opt, true);
}

CoupledTrajectory diffusion_baseline_solve(const Params& p, const RadialProfile& rho1_0, const RadialProfile& rho2_0,
                                           const CoupledOptions& opt) {
    return run_coupled(p, rho1_0, rho2_0, opt, false);
}

double radial_heat_kernel(double r, double s, double t) {
    const double d = r - s;
    return std::exp(-d * d / (4.0 * t)) * i0e(r * s / (2.0 * t)) / (4.0 * kPi * t);
}

CoupledTrajectory subsolution_oracle(const Params& p, const RadialProfile& rho1_0, const RadialProfile& rho2_0,
                                     double T, double dt, double frame_interval) {
    p.validate();
    if (!(T > 0.0) || !(dt > 0.0) || !(frame_interval > 0.0))
        throw ConfigError("subsolution_oracle: T, dt and frame_interval must be positive");
    const GridPtr g = rho1_0.grid_ptr();
    const std::size_t n = g->size();
    CoupledTrajectory tr;
    tr.params = p;
    tr.mode = HalfTimeMode::SubsolutionOracle;
    tr.grid = g;

    std::vector<std::size_t> src;
    for (std::size_t j = 0; j < n; ++j) {
        if (rho1_0[j] > 0.0) {
            src.push_back(j);
            if (g->edge(j + 1) <= 0.5 * p.L) tr.support_hypothesis = false;
        }
    }
    std::vector<std::size_t> inner;
    for (std::size_t i = 0; i < n; ++i)
        if (rho2_0[i] > 0.0) inner.push_back(i);

    auto g1_at = [&](double r, double t) {
        double s = 0.0;
        for (std::size_t j : src) s += g->volume(j) * rho1_0[j] * radial_heat_kernel(r, g->center(j), t);
        return s;
    };
    auto full_g1 = [&](double t) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = t > 0.0 ? g1_at(g->center(i), t) : rho1_0[i];
        return v;
    };

    std::vector<double> cum(n, 0.0), g2(rho2_0.values().begin(), rho2_0.values().end());
    std::vector<double> g_prev(inner.size());
    for (std::size_t k = 0; k < inner.size(); ++k) g_prev[k] = rho1_0[inner[k]];
    auto mass2 = [&]() {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += g->volume(i) * g2[i];
        return m;
    };
    tr.frames.push_back(make_state(0.0, full_g1(0.0), g2, cum, g));
    tr.t_series.push_back(0.0);
    tr.mass1_series.push_back(tr.frames[0].mass1);
    tr.mass2_series.push_back(tr.frames[0].mass2);

    double t = 0.0, next_frame = frame_interval;
    while (t < T * (1.0 - 1e-12)) {
        const double h = std::min(dt, T - t);
        for (std::size_t k = 0; k < inner.size(); ++k) {
            const double r = g->center(inner[k]);
            const double gm = g1_at(r, t + 0.5 * h), ge = g1_at(r, t + h);
            cum[inner[k]] += h / 6.0 * (g_prev[k] + 4.0 * gm + ge);
            g_prev[k] = ge;
            g2[inner[k]] = rho2_0[inner[k]] * std::exp(-p.eps * cum[inner[k]]);
        }
        t += h;
        ++tr.steps;
        tr.t_series.push_back(t);
        tr.mass1_series.push_back(tr.frames[0].mass1);
        tr.mass2_series.push_back(mass2());
        if (t >= next_frame * (1.0 - 1e-12) || t >= T * (1.0 - 1e-12)) {
            tr.frames.push_back(make_state(t, full_g1(t), g2, cum, g));
            next_frame += frame_interval;
        }
    }
    return tr;
}

HalfTimeReport half_time(const CoupledTrajectory& traj, double fraction) {
    if (fraction < 0.0) throw ConfigError("half_time: fraction must be >= 0");
    HalfTimeReport rep;
    rep.fraction = fraction;
    rep.mode = traj.mode;
    rep.params = traj.params;
    const auto& ts = traj.t_series;
    const auto& m2 = traj.mass2_series;
    if (ts.empty()) throw ConfigError("half_time: empty trajectory");
    rep.t_end = ts.back();
    const double thr = fraction * kPi * traj.params.theta;
    if (thr == 0.0) {
        rep.reached = true;
        rep.tau = 0.0;
        return rep;
    }
    for (std::size_t k = 1; k < ts.size(); ++k) {
        const double d1 = m2[0] - m2[k];
        if (d1 >= thr) {
            const double d0 = m2[0] - m2[k - 1];
            const double s = d1 > d0 ? (thr - d0) / (d1 - d0) : 1.0;
            rep.tau = ts[k - 1] + s * (ts[k] - ts[k - 1]);
            rep.reached = true;
            return rep;
        }
    }
    rep.tau = rep.t_end;
    return rep;
}

double exp_integral_e1(double x) {
    if (!(x > 0.0)) throw ConfigError("E1: argument must be positive");
    // y = x e^u maps [x, inf) to [0, inf)
    auto f = [x](double u) { return std::exp(-x * std::exp(u)); };
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, 0.0, std::numeric_limits<double>::infinity(), 20, 1e-15, &err);
}

double tau_d_lower_bound(const Params& p, double C) {
    if (!positive_finite(p.M0) || !positive_finite(p.eps) || !positive_finite(p.L) || !positive_finite(C))
        throw ConfigError("tau_d_lower_bound: M0, eps, L and C must be positive");
    const double rhs = 4.0 * kPi * std::log(2.0) / (p.M0 * p.eps);
    double lo = std::log(1e-300), hi = std::log(700.0);  // log x bracket, E1 decreasing in x
    if (!(exp_integral_e1(std::exp(lo)) >= rhs && exp_integral_e1(std::exp(hi)) <= rhs)) {
        std::ostringstream os;
        os << "tau_d_lower_bound: bisection bracket failure for right side " << rhs;
        throw SchemeError(os.str());
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (exp_integral_e1(std::exp(mid)) > rhs ? lo : hi) = mid;
    }
    return C * p.L * p.L / std::exp(0.5 * (lo + hi));
}

MassComparisonReport verify_mass_comparison(const CoupledTrajectory& traj, double t_max) {
    MassComparisonReport rep;
    const auto& p = traj.params;
    const auto& f0 = traj.frames.front();
    FPOptions o;
    for (const auto& fr : traj.frames)
        if (fr.t > 0.0 && fr.t <= t_max * (1.0 + 1e-12)) o.output_times.push_back(fr.t);
    if (o.output_times.empty()) throw ConfigError("verify_mass_comparison: no frames before t_max");
    o.T = o.output_times.back();
    o.dt_max = 0.05;
    auto pot = std::make_shared<const AnnulusPotential>(p.gamma);
    const auto fp = fp_solve(f0.rho1, pot, o);
    const double half = 0.5 * f0.mass2;
    rep.tol = 1e-6 * p.M0;
    rep.worst_margin = HUGE_VAL;
    for (const auto& fr : traj.frames) {
        if (fr.t > o.T * (1.0 + 1e-12)) continue;
        const FPFrame* ff = fp.frame_at(fr.t);
        if (!ff) continue;
        ++rep.frames_checked;
        const auto m1 = to_mass_function(fr.rho1);
        const auto mf = to_mass_function(ff->values);
        for (std::size_t j = 0; j < m1.size(); ++j) {
            const double margin = m1[j] - mf[j] + half;
            if (margin < rep.worst_margin) {
                rep.worst_margin = margin;
                rep.worst_t = fr.t;
                rep.worst_r = traj.grid->edge(j);
            }
            if (margin < -rep.tol) ++rep.violations;
        }
    }
    return rep;
}

PassThroughReport verify_pass_through(const CoupledTrajectory& traj, double t_end) {
    const auto& fr = traj.frame_before(t_end);
    if (fr.t < t_end * (1.0 - 1e-9) && &fr == &traj.frames.back())
        throw ConfigError("verify_pass_through: trajectory too short");
    const auto& g = *traj.grid;
    const auto& p = traj.params;
    const auto& r2_0 = traj.frames.front().rho2;
    PassThroughReport rep;
    rep.t_end = fr.t;
    std::vector<std::size_t> cells;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.center(i) > 0.5 && g.center(i) < 1.0) cells.push_back(i);
    if (cells.empty()) throw ConfigError("verify_pass_through: no cells in (1/2, 1)");
    rep.min_cum = HUGE_VAL;
    for (std::size_t i : cells) {
        rep.min_cum = std::min(rep.min_cum, fr.cum_rho1[i]);
        if (r2_0[i] > 0.0) rep.depletion_max = std::max(rep.depletion_max, fr.rho2[i] / r2_0[i]);
    }
    rep.c = rep.min_cum * p.gamma / p.M0;
    double min_avg = HUGE_VAL;
    const double width = 1.0 / p.gamma;
    for (std::size_t a = 0; a < cells.size(); ++a) {
        const double start = g.edge(cells[a]);
        if (start + width > 1.0 + 1e-12) break;
        double s = 0.0, v = 0.0;
        for (std::size_t b = a; b < cells.size() && g.edge(cells[b] + 1) <= start + width + 1e-12; ++b) {
            s += g.volume(cells[b]) * fr.cum_rho1[cells[b]];
            v += g.volume(cells[b]);
        }
        if (v > 0.0) min_avg = std::min(min_avg, s / v);
    }
    rep.c_avg = std::isfinite(min_avg) ? min_avg * p.gamma / p.M0 : rep.c;
    rep.depletion_bound = std::exp(-p.eps * rep.c * p.M0 / p.gamma);
    return rep;
}

}  // namespace chemoscale
