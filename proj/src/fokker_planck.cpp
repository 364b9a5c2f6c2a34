#include "chemoscale/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace chemoscale {

namespace {
constexpr double kPi = std::numbers::pi;
}

double bernoulli(double x) {
    if (std::abs(x) < 1e-6) return 1.0 - 0.5 * x + x * x / 12.0;
    if (x > 745.0) return x * std::exp(-x);
    return x / std::expm1(x);
}

FPOperator::FPOperator(GridPtr grid, std::vector<double> h_cells) : grid_(std::move(grid)), h_(std::move(h_cells)) {
    if (!grid_) throw ConfigError("FPOperator: null grid");
    if (h_.size() != grid_->size()) throw ConfigError("FPOperator: potential size does not match grid");
    const std::size_t nf = grid_->size() - 1;
    a_.resize(nf);
    bp_.resize(nf);
    bm_.resize(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        const double delta = grid_->center(f + 1) - grid_->center(f);
        a_[f] = 2.0 * kPi * grid_->edge(f + 1) / delta;
        const double dh = h_[f + 1] - h_[f];
        bp_[f] = bernoulli(dh);
        bm_[f] = bernoulli(-dh);
    }
}

FPOperator::FPOperator(GridPtr grid, const RadialPotential& pot)
    : FPOperator(grid, sample_potential(pot, *grid)) {}

void FPOperator::apply(std::span<const double> in, std::span<double> out, bool dual) const {
    const std::size_t n = h_.size();
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
    for (std::size_t f = 0; f + 1 < n; ++f) {
        const double up = a_[f] * (dual ? bm_[f] : bp_[f]);  // row f, col f+1
        const double lo = a_[f] * (dual ? bp_[f] : bm_[f]);  // row f+1, col f
        out[f] += up * in[f + 1] - a_[f] * bm_[f] * in[f];
        out[f + 1] += lo * in[f] - a_[f] * bp_[f] * in[f + 1];
    }
}

void solve_tridiagonal(std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
                       std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

void FPOperator::step(std::vector<double>& u, double dt, bool dual, std::span<const double> sink) const {
    const std::size_t n = h_.size();
    const auto vol = grid_->volumes();
    std::vector<double> lower(n, 0.0), diag(n), upper(n, 0.0), rhs(n);
    apply(u, rhs, dual);
    for (std::size_t i = 0; i < n; ++i) {
        diag[i] = vol[i];
        if (!sink.empty()) {
            diag[i] += dt * vol[i] * sink[i];
            rhs[i] -= vol[i] * sink[i] * u[i];
        }
        rhs[i] *= dt;
    }
    for (std::size_t f = 0; f + 1 < n; ++f) {
        upper[f] = -dt * a_[f] * (dual ? bm_[f] : bp_[f]);
        lower[f + 1] = -dt * a_[f] * (dual ? bp_[f] : bm_[f]);
        diag[f] += dt * a_[f] * bm_[f];
        diag[f + 1] += dt * a_[f] * bp_[f];
    }
    solve_tridiagonal(lower, diag, upper, rhs);
    for (std::size_t i = 0; i < n; ++i) u[i] += rhs[i];
}

double FPOperator::cfl_dt(double cfl) const {
    double dt = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f + 1 < h_.size(); ++f) {
        const double dh = std::abs(h_[f + 1] - h_[f]);
        if (dh == 0.0) continue;
        const double delta = grid_->center(f + 1) - grid_->center(f);
        dt = std::min(dt, cfl * delta * delta / dh);
    }
    return dt;
}

double FPOperator::face_omega(std::size_t f) const { return std::exp(h_[f + 1]) * bp_[f]; }

const FPFrame* FPTrajectory::frame_at(double t, double tol) const {
    for (const auto& fr : frames)
        if (std::abs(fr.t - t) <= tol * std::max(1.0, std::abs(t))) return &fr;
    return nullptr;
}

ZW z_and_w(std::span<const double> f, const FPOperator& op, int n) {
    const auto& g = op.grid();
    const auto h = op.H();
    const auto vol = g.volumes();
    const std::size_t nc = g.size();
    ZW out;
    double fbar = 0.0;
    if (n == 0) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < nc; ++i) {
            const double w = vol[i] * std::exp(h[i]);
            num += w * f[i];
            den += w;
        }
        fbar = num / den;
    }
    for (std::size_t i = 0; i < nc; ++i) {
        const double w = vol[i] * std::exp(h[i]);
        const double d = f[i] - fbar;
        out.Z += w * d * d;
        if (n != 0) {
            const double c = g.center(i);
            out.W += static_cast<double>(n * n) * w * f[i] * f[i] / (c * c);
        }
    }
    for (std::size_t k = 0; k + 1 < nc; ++k) {
        const double df = f[k + 1] - f[k];
        out.W += op.face_conductance(k) * op.face_omega(k) * df * df;
    }
    return out;
}

ZW z_and_w(const RadialProfile& f, const RadialPotential& pot, int n) {
    FPOperator op(f.grid_ptr(), pot);
    return z_and_w(f.values(), op, n);
}

namespace {

FPFrame make_frame(double t, const std::vector<double>& u, const FPOperator& op, bool dual) {
    const auto& g = op.grid();
    const auto h = op.H();
    const std::size_t n = g.size();
    FPFrame fr{t, RadialProfile(op.grid_ptr(), u, dual ? ProfileKind::Field : ProfileKind::Density)};
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = dual ? u[i] : u[i] * std::exp(-h[i]);
        fr.mass += g.volume(i) * (dual ? u[i] * std::exp(h[i]) : u[i]);
        fr.sup = std::max(fr.sup, std::abs(u[i]));
    }
    const auto zw = z_and_w(f, op, 0);
    fr.Z = zw.Z;
    fr.W = zw.W;
    return fr;
}

FPTrajectory run(const RadialProfile& u0, PotentialPtr pot, const FPOptions& opt, bool dual) {
    if (!pot) throw ConfigError("solver: null potential");
    if (!(opt.T >= 0.0) || !(opt.dt_max > 0.0)) throw ConfigError("solver: need T >= 0 and dt_max > 0");
    if (!dual) {
        if (u0.kind() != ProfileKind::Density) throw ConfigError("fp_solve: initial data must be a Density");
        u0.check_invariants();
    }
    FPOperator op(u0.grid_ptr(), *pot);
    FPTrajectory tr;
    tr.dual = dual;
    tr.potential = pot;
    tr.grid = u0.grid_ptr();
    tr.H.assign(op.H().begin(), op.H().end());

    std::vector<double> outs;
    for (double t : opt.output_times)
        if (t > 0.0 && t < opt.T) outs.push_back(t);
    outs.push_back(opt.T);
    std::sort(outs.begin(), outs.end());
    outs.erase(std::unique(outs.begin(), outs.end()), outs.end());

    double dt_pol = opt.dt_max;
    if (!opt.fixed_step) {
        dt_pol = std::min(opt.dt_max, op.cfl_dt(opt.cfl));
        if (dt_pol < opt.dt_min) {
            std::ostringstream os;
            os << "CFL step " << dt_pol << " below dt_min " << opt.dt_min << " (potential too stiff for grid)";
            throw SchemeError(os.str());
        }
    }

    std::vector<double> u(u0.values().begin(), u0.values().end());
    tr.frames.push_back(make_frame(0.0, u, op, dual));
    double t = 0.0;
    for (double target : outs) {
        if (target <= 0.0) continue;
        while (t < target) {
            const double rem = target - t;
            double dt = std::min(dt_pol, rem);
            // avoid a sliver step before the output time
            if (rem > dt && rem < dt * (1.0 + 1e-9)) dt = rem;
            op.step(u, dt, dual);
            ++tr.steps;
            t = (dt == rem) ? target : t + dt;
            if (!dual) {
                double mx = 0.0, mn = 0.0;
                for (double v : u) {
                    mx = std::max(mx, v);
                    mn = std::min(mn, v);
                }
                if (mn < -1e-12 * mx) {
                    std::ostringstream os;
                    os << "negative density " << mn << " at t=" << t;
                    throw SchemeError(os.str());
                }
            }
            if (opt.record_every_step && t < target) tr.frames.push_back(make_frame(t, u, op, dual));
        }
        tr.frames.push_back(make_frame(target, u, op, dual));
    }
    return tr;
}

}  // namespace

FPTrajectory fp_solve(const RadialProfile& rho0, PotentialPtr pot, const FPOptions& opt) {
    return run(rho0, std::move(pot), opt, false);
}

FPTrajectory fp_solve(const RadialProfile& rho0, PotentialPtr pot, double T, double dt_max) {
    FPOptions o;
    o.T = T;
    o.dt_max = dt_max;
    return fp_solve(rho0, std::move(pot), o);
}

FPTrajectory dual_solve(const RadialProfile& f0, PotentialPtr pot, const FPOptions& opt) {
    return run(f0, std::move(pot), opt, true);
}

FPTrajectory dual_solve(const RadialProfile& f0, PotentialPtr pot, double T, double dt_max) {
    FPOptions o;
    o.T = T;
    o.dt_max = dt_max;
    return dual_solve(f0, std::move(pot), o);
}

RadialProfile stationary_state(double total_mass, const RadialPotential& pot, GridPtr grid) {
    if (!(total_mass > 0.0)) throw ConfigError("stationary_state: total mass must be positive");
    auto h = sample_potential(pot, *grid);
    const double hmax = *std::max_element(h.begin(), h.end());
    double z = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        h[i] = std::exp(h[i] - hmax);
        z += grid->volume(i) * h[i];
    }
    for (double& v : h) v *= total_mass / z;
    return RadialProfile(std::move(grid), std::move(h), ProfileKind::Density);
}

double stationary_tail_ratio(const RadialPotential& pot, const RadialGrid& grid, double r1) {
    const std::size_t j = grid.find_edge(r1);
    if (j == RadialGrid::npos) throw ConfigError("stationary_tail_ratio: r1 is not a grid edge");
    double in = 0.0, out = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid.volume(i) * std::exp(pot.H(grid.center(i)));
        (i < j ? in : out) += w;
    }
    return out / in;
}

double duality_invariant(const FPTrajectory& rho_traj, const FPTrajectory& f_traj, double t) {
    if (rho_traj.dual || !f_traj.dual) throw ConfigError("duality_invariant: need a forward and a dual trajectory");
    if (!rho_traj.grid->same_as(*f_traj.grid) || rho_traj.H != f_traj.H)
        throw ConfigError("duality_invariant: trajectories use different grids or potentials");
    if (!rho_traj.frame_at(t) || !f_traj.frame_at(t))
        throw ConfigError("duality_invariant: trajectory time ranges too short");
    const auto& g = *rho_traj.grid;
    const std::size_t n = g.size();
    const auto& h = rho_traj.H;

    const auto& rho0 = rho_traj.frames.front().values;
    const auto& f0 = f_traj.frames.front().values;
    const double mass = rho_traj.frames.front().mass;
    double z = 0.0, fnum = 0.0;
    const double hmax = *std::max_element(h.begin(), h.end());
    for (std::size_t i = 0; i < n; ++i) {
        const double w = g.volume(i) * std::exp(h[i] - hmax);
        z += w;
        fnum += w * f0[i];
    }
    const double fbar = fnum / z;
    std::vector<double> rs(n);
    double l1 = 0.0, finf = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        rs[i] = mass * std::exp(h[i] - hmax) / z;
        l1 += g.volume(i) * std::abs(rho0[i] - rs[i]);
        finf = std::max(finf, std::abs(f0[i] - fbar));
    }
    // floor keeps rho0 = rho_s from dividing roundoff by roundoff
    const double scale = std::max(l1, 1e-8 * std::abs(mass)) * finf;
    if (scale == 0.0) return 0.0;

    auto pairing = [&](const RadialProfile& rho, const RadialProfile& f) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += g.volume(i) * (rho[i] - rs[i]) * (f[i] - fbar);
        return s;
    };
    const double i0 = pairing(rho0, f_traj.frame_at(t)->values);
    double dev = 0.0;
    std::size_t pairs = 0;
    for (const auto& fr : rho_traj.frames) {
        if (fr.t > t * (1.0 + 1e-12)) continue;
        const FPFrame* ff = f_traj.frame_at(std::max(0.0, t - fr.t));
        if (!ff) continue;
        dev = std::max(dev, std::abs(pairing(fr.values, ff->values) - i0));
        ++pairs;
    }
    if (pairs < 2) throw ConfigError("duality_invariant: no matching frame pairs");
    return dev / scale;
}

MilestoneTimes milestone_times(const RadialProfile& rho0, const AnnulusPotential& pot, double sigma,
                               const MilestoneConstants& c) {
    const double gamma = pot.gamma();
    if (!(gamma > 8.0)) throw ConfigError("milestone_times: gamma must exceed 8");
    if (!(sigma > 0.0 && sigma < 1.0)) throw ConfigError("milestone_times: sigma must be in (0,1)");
    MilestoneTimes m;
    m.sigma = sigma;
    m.gamma = gamma;
    m.constants = c;
    m.mass = integrate(rho0);
    if (!(m.mass > 0.0)) throw ConfigError("milestone_times: rho0 has no mass");
    const auto& g = rho0.grid();
    for (std::size_t i = 0; i < g.size(); ++i)
        m.sup_weighted = std::max(m.sup_weighted, rho0[i] * std::exp(-pot.H(g.center(i))));
    const double h0 = pot.H(0.0), h2 = pot.H(kShoulderRadius);
    m.t1 = c.c_t1 * (1.0 + std::log(1.0 / sigma) + std::log(gamma));
    m.t2 = m.t1 + c.c_t2 / gamma * std::pow(m.sup_weighted / (std::sqrt(sigma) * m.mass), 16.0 / (gamma - 8.0));
    m.t3 = c.c_t3 * (m.t1 + 1.0 / gamma * std::pow(m.sup_weighted / (sigma * m.mass), 8.0 / (gamma - 8.0)));
    m.Zsigma = sigma * std::exp(-h0) * m.mass * m.mass;
    m.Q1 = c.c_q * gamma * gamma * m.mass * m.mass * std::exp(-h0);
    m.Q2 = c.c_q * gamma * gamma * m.mass * m.mass * std::exp(-h2);
    return m;
}

DecayReport verify_decay_bound(const FPTrajectory& traj, const MilestoneTimes& m) {
    DecayReport r;
    r.c_admissible = std::numeric_limits<double>::infinity();
    const double p = (m.gamma - 8.0) / 8.0;
    const double k2 = m.sup_weighted * m.sup_weighted;
    for (std::size_t k = 0; k < traj.frames.size(); ++k) {
        const auto& fr = traj.frames[k];
        if (k > 0 && fr.Z > traj.frames[k - 1].Z * (1.0 + 1e-12) + 1e-300) r.z_monotone = false;
        if (!r.t_reach_zsigma && fr.Z <= m.Zsigma) r.t_reach_zsigma = fr.t;
        if (fr.t <= m.t1) continue;
        ++r.frames_checked;
        if (fr.Z <= m.Zsigma) continue;
        ++r.frames_above_zsigma;
        const double c = std::pow(k2 / fr.Z, 1.0 / p) / (m.gamma * (fr.t - m.t1));
        r.c_admissible = std::min(r.c_admissible, c);
    }
    return r;
}

LinftyReport verify_linfty(const FPTrajectory& traj, double t_lo, double t_hi) {
    if (traj.dual) throw ConfigError("verify_linfty: needs a forward trajectory");
    LinftyReport r;
    r.gamma = traj.potential->coupling();
    const double m0 = traj.frames.front().mass;
    for (const auto& fr : traj.frames) {
        if (fr.t <= 0.0 || fr.t < t_lo || fr.t > t_hi) continue;
        const double ratio = fr.sup / (std::max(1.0 / fr.t, r.gamma) * m0);
        r.ratios.emplace_back(fr.t, ratio);
        r.C = std::max(r.C, ratio);
    }
    return r;
}

double interpolate_cells(const RadialProfile& p, double r) {
    const auto& g = p.grid();
    const auto c = g.centers();
    if (r <= c.front()) return p[0];
    if (r >= c.back()) return p[c.size() - 1];
    const auto k = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), r) - c.begin());
    const double s = (r - c[k - 1]) / (c[k] - c[k - 1]);
    return (1.0 - s) * p[k - 1] + s * p[k];
}

FrontReport transport_front(const FPTrajectory& f_traj, double gamma, double c_level, double t_lo, double t_hi,
                            double station) {
    if (!f_traj.dual) throw ConfigError("transport_front: needs a dual trajectory");
    const auto& f0 = f_traj.frames.front().values;
    const auto& g = f0.grid();
    FrontReport rep;
    rep.c_level = c_level;
    // shape precondition: values in [0,1], radially nonincreasing, f0 = 1 on B_{d1} with d1 > 1/sqrt2
    const double tol = 1e-12;
    for (std::size_t i = 0; i < f0.size(); ++i) {
        if (f0[i] < -tol || f0[i] > 1.0 + tol) throw ConfigError("transport_front: f0 must take values in [0,1]");
        if (i > 0 && f0[i] > f0[i - 1] + tol) throw ConfigError("transport_front: f0 must be radially nonincreasing");
    }
    std::size_t k = 0;
    while (k < f0.size() && f0[k] >= 1.0 - tol) ++k;
    rep.d1 = g.edge(k);
    if (!(rep.d1 > kPlateauRadius)) throw ConfigError("transport_front: f0 must equal 1 beyond r = 1/sqrt2");
    rep.d1 = std::min(rep.d1, 1.0);

    rep.station_min = HUGE_VAL;
    rep.c_radius = HUGE_VAL;
    for (const auto& fr : f_traj.frames) {
        const auto& f = fr.values;
        rep.station_min = std::min(rep.station_min, interpolate_cells(f, station));
        if (fr.t < t_lo || fr.t > t_hi) continue;
        double radius = 0.0;
        std::size_t i = 0;
        while (i < f.size() && f[i] >= c_level) ++i;
        if (i == f.size()) radius = g.r_max();
        else if (i > 0) {
            const double c0 = g.center(i - 1), c1 = g.center(i);
            radius = c0 + (f[i - 1] - c_level) / (f[i - 1] - f[i]) * (c1 - c0);
        }
        const double cr = radius / std::sqrt(1.0 + gamma * fr.t);
        rep.samples.push_back({fr.t, radius, cr});
        rep.c_radius = std::min(rep.c_radius, cr);
        rep.c_radius_max = std::max(rep.c_radius_max, cr);
    }
    if (rep.samples.empty()) rep.c_radius = 0.0;
    return rep;
}

std::pair<RadialProfile, RadialProfile> threshold_decompose(const RadialProfile& G, const RadialPotential& pot,
                                                            double alpha) {
    if (!(alpha > 0.0)) throw ConfigError("threshold_decompose: alpha must be positive");
    const auto& g = G.grid();
    std::vector<double> g1(G.size(), 0.0), g2(G.size(), 0.0);
    const double la = std::log(2.0 * alpha);
    for (std::size_t i = 0; i < G.size(); ++i) {
        const bool on_s = G[i] != 0.0 && std::log(std::abs(G[i])) >= la + pot.H(g.center(i));
        (on_s ? g2 : g1)[i] = G[i];
    }
    return {RadialProfile(G.grid_ptr(), std::move(g1), G.kind()), RadialProfile(G.grid_ptr(), std::move(g2), G.kind())};
}

BallMassReport mass_in_ball_from_Z(const RadialProfile& rho, const RadialPotential& pot, double r, double Z,
                                   double sigma, double A, double mass0, double tail_ratio) {
    if (r > kPlateauRadius * (1.0 + 1e-12)) throw ConfigError("mass_in_ball_from_Z: r must be <= 1/sqrt2");
    BallMassReport rep;
    const double zsigma = sigma * std::exp(-pot.H(0.0)) * mass0 * mass0;
    rep.precondition = Z <= A * zsigma;
    const auto& g = rho.grid();
    const std::size_t j = g.find_edge(r);
    if (j == RadialGrid::npos) throw ConfigError("mass_in_ball_from_Z: r is not a grid edge");
    const auto rs = stationary_state(integrate(rho), pot, rho.grid_ptr());
    for (std::size_t i = 0; i < j; ++i) {
        rep.l1_dev += g.volume(i) * std::abs(rho[i] - rs[i]);
        rep.mass_in += g.volume(i) * rho[i];
    }
    const double root = std::sqrt(kPi * sigma * A);
    rep.l1_bound = root * r * mass0;
    rep.mass_bound = (2.0 * r * r - tail_ratio - r * root) * mass0;
    rep.l1_holds = rep.l1_dev <= rep.l1_bound;
    rep.mass_holds = rep.mass_in >= rep.mass_bound;
    return rep;
}

}  // namespace chemoscale
