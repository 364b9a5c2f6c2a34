#include "chemoscale/scaling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "chemoscale/config.hpp"

namespace chemoscale {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool all_positive(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x) && x > 0.0; });
}

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

void SweepConfig::validate() const {
    if (schema_version != 1) throw ConfigError("sweep: unsupported schema_version");
    if (L.empty() || gamma.empty() || eps.empty()) throw ConfigError("sweep: axes L, gamma, eps must be nonempty");
    if (M0.empty() == M0_eps_over_gamma.empty())
        throw ConfigError("sweep: give exactly one of M0 and M0_eps_over_gamma");
    if (!all_positive(L) || !all_positive(gamma) || !all_positive(eps) || !all_positive(M0) ||
        !all_positive(M0_eps_over_gamma))
        throw ConfigError("sweep: axis values must be positive");
    if (!(theta > 0.0) || !(B > 0.0) || !(T_max > 0.0) || !(T_max_D > 0.0) || !(dt_max > 0.0) || !(cfl > 0.0) ||
        !(tau_d_C > 0.0))
        throw ConfigError("sweep: theta, B, T_max, T_max_D, dt_max, cfl, tau_d_C must be positive");
    if (workers == 0) throw ConfigError("sweep: workers must be >= 1");
    const std::size_t n = L.size() * gamma.size() * eps.size() * std::max(M0.size(), M0_eps_over_gamma.size());
    if (n > max_runs) throw ConfigError("sweep: " + std::to_string(n) + " runs exceeds max_runs");
}

std::vector<Params> SweepConfig::tuples() const {
    validate();
    std::vector<Params> out;
    const auto& m_axis = M0.empty() ? M0_eps_over_gamma : M0;
    for (double l : L)
        for (double g : gamma)
            for (double e : eps)
                for (double m : m_axis) {
                    const double mass = M0.empty() ? m * g / e : m;
                    out.push_back(Params::normalized(g, theta, l, mass, e, B));
                }
    return out;
}

std::string SweepConfig::fingerprint() const { return to_json(*this).dump(); }

SweepRecord run_single(const Params& p, const SweepConfig& cfg, const std::string& run_id) {
    SweepRecord r;
    r.run_id = run_id;
    r.L = p.L;
    r.gamma = p.gamma;
    r.eps = p.eps;
    r.M0 = p.M0;
    r.theta = p.theta;
    r.chi = p.chi;
    std::vector<std::string> notes;
    try {
        const GridPtr g = cfg.grid.r_max > 0.0
                              ? build_graded_grid(cfg.grid.r_max, cfg.grid.n_core, cfg.grid.n_far, p.gamma, 0.125)
                              : default_grid(p, cfg.grid.n_core, cfg.grid.n_far);
        r.grid_n = g->size();
        r.r_max = g->r_max();
        const auto rho1 = initial_rho1(g, p, cfg.seed);
        const auto rho2 = initial_rho2(g, p);
        try {
            r.tau_D_lb = tau_d_lower_bound(p, cfg.tau_d_C);
        } catch (const std::exception& e) {
            notes.push_back(std::string("tauDlb:") + e.what());
        }
        if (p.gamma > 8.0) r.t3_fitted = milestone_times(rho1, AnnulusPotential(p.gamma), 1e-3).t3;

        CoupledOptions o;
        o.T = cfg.T_max;
        o.dt_max = cfg.dt_max;
        o.cfl = cfg.cfl;
        o.frame_interval = 0.25;
        o.stop_fraction = 0.5;
        o.stop_extra = 1.0;
        const auto tr = coupled_solve(p, rho1, rho2, o);
        const auto h = half_time(tr, 0.5);
        const auto q = half_time(tr, 0.25);
        if (q.reached) r.tau_C_quarter = q.tau;
        if (h.reached) {
            r.tau_C = h.tau;
            if (cfg.checks) {
                std::size_t before = 0;
                for (const auto& f : tr.frames)
                    if (f.t > 0.0 && f.t <= h.tau) ++before;
                std::optional<CoupledTrajectory> fine;
                if (before < 4) {
                    // too few frames below tau_C for the comparison
                    CoupledOptions of = o;
                    of.frame_interval = h.tau / 8.0;
                    fine = coupled_solve(p, rho1, rho2, of);
                }
                const auto& ct = fine ? *fine : tr;
                const auto pt = verify_pass_through(ct, ct.frames.back().t);
                r.passthrough_c = pt.c;
                r.masscmp_ok = verify_mass_comparison(ct, h.tau).ok();
            }
        } else {
            notes.push_back("tauC_not_reached");
        }

        if (cfg.simulate_tau_d) {
            CoupledOptions od;
            od.T = cfg.T_max_D;
            od.dt_max = cfg.dt_max;
            od.cfl = cfg.cfl;
            od.frame_interval = cfg.T_max_D;
            od.stop_fraction = 0.5;
            const auto base = diffusion_baseline_solve(p, rho1, rho2, od);
            const auto hd = half_time(base, 0.5);
            if (hd.reached) r.tau_D = hd.tau;
            else notes.push_back("tauD_not_reached");
        }
    } catch (const std::exception& e) {
        notes.push_back(std::string("error:") + e.what());
    }
    if (!notes.empty()) {
        std::string s;
        for (const auto& n : notes) s += (s.empty() ? "" : ";") + n;
        r.status = sanitize(s);
    }
    return r;
}

std::vector<SweepRecord> run_sweep(const SweepConfig& cfg, const std::optional<fs::path>& store_dir) {
    const auto tuples = cfg.tuples();
    std::vector<std::string> ids(tuples.size());
    for (std::size_t k = 0; k < tuples.size(); ++k) {
        const auto& p = tuples[k];
        std::ostringstream os;
        os << "r" << k << "_L" << fmt(p.L) << "_g" << fmt(p.gamma) << "_e" << fmt(p.eps) << "_M" << fmt(p.M0);
        ids[k] = os.str();
    }
    std::vector<std::optional<SweepRecord>> out(tuples.size());
    const std::string fp = cfg.fingerprint();
    if (store_dir) {
        const auto man = *store_dir / "manifest.json";
        bool same = false;
        if (fs::exists(man)) {
            std::ifstream in(man);
            const auto j = json::parse(in, nullptr, false);
            same = !j.is_discarded() && j.contains("fingerprint") && j["fingerprint"] == fp;
        }
        if (same) {
            for (std::size_t k = 0; k < ids.size(); ++k) {
                const auto f = *store_dir / "runs" / (ids[k] + ".csv");
                if (fs::exists(f)) {
                    auto recs = parse_csv(f);
                    if (recs.size() == 1) out[k] = recs.front();
                }
            }
        } else {
            if (fs::exists(*store_dir / "runs")) fs::remove_all(*store_dir / "runs");
            json m;
            m["fingerprint"] = fp;
            m["config"] = to_json(cfg);
            m["runs"] = ids;
            write_text(man, m.dump(2) + "\n");
        }
    }
    std::atomic<std::size_t> next{0};
    std::mutex io;
    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next++;
            if (k >= tuples.size()) return;
            if (out[k]) continue;
            auto rec = run_single(tuples[k], cfg, ids[k]);
            if (store_dir) {
                std::lock_guard<std::mutex> lock(io);
                emit_csv({rec}, *store_dir / "runs" / (ids[k] + ".csv"));
            }
            out[k] = std::move(rec);
        }
    };
    const std::size_t nw = std::min(cfg.workers, std::max<std::size_t>(1, tuples.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < nw; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    std::vector<SweepRecord> recs;
    for (auto& r : out) recs.push_back(std::move(*r));
    return recs;
}

const char* to_string(Response r) {
    switch (r) {
        case Response::TauC: return "tau_C";
        case Response::TauCQuarter: return "tau_C_quarter";
        case Response::TauD: return "tau_D";
    }
    return "?";
}

const char* to_string(Axis a) {
    switch (a) {
        case Axis::L: return "L";
        case Axis::Gamma: return "gamma";
        case Axis::LogM0Eps: return "log(M0 eps)";
    }
    return "?";
}

ScalingFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, std::string axis) {
    if (x.size() != y.size()) throw ConfigError("fit: x and y sizes differ");
    if (x.size() < 3) throw ConfigError("fit: need at least 3 points");
    const std::size_t n = x.size();
    double sx = 0, sy = 0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ConfigError("fit: values must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx < 1e-24) throw ConfigError("fit: degenerate spread on the axis");
    ScalingFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ly[i] - (f.intercept + f.slope * lx[i]);
        ssr += e * e;
    }
    f.r2 = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
    f.axis = std::move(axis);
    f.x = x;
    f.y = y;
    return f;
}

ScalingFit fit_scaling(const std::vector<SweepRecord>& records, Response response, Axis axis) {
    std::vector<double> x, y;
    std::set<double> others_L, others_g, others_me;
    for (const auto& r : records) {
        const double v = response == Response::TauC ? r.tau_C : response == Response::TauCQuarter ? r.tau_C_quarter : r.tau_D;
        if (!(v > 0.0)) continue;
        const double me = r.M0 * r.eps;
        double ax = 0;
        switch (axis) {
            case Axis::L: ax = r.L; others_g.insert(r.gamma); others_me.insert(me / r.gamma); break;
            case Axis::Gamma: ax = r.gamma; others_L.insert(r.L); others_me.insert(me / r.gamma); break;
            case Axis::LogM0Eps: ax = std::log(me); others_L.insert(r.L); others_g.insert(r.gamma); break;
        }
        x.push_back(ax);
        y.push_back(v);
    }
    if (others_L.size() > 1 || others_g.size() > 1 || others_me.size() > 1)
        throw ConfigError("fit_scaling: other axes are not fixed");
    if (std::set<double>(x.begin(), x.end()).size() < 3) throw ConfigError("fit_scaling: need >= 3 axis values");
    return fit_loglog(x, y, to_string(axis));
}

const char* const kSweepCsvHeader =
    "run_id,L,gamma,eps,M0,theta,chi,tau_C,tau_C_quarter,tau_D,tau_D_lb,t3_fitted,passthrough_c,masscmp_ok,grid_n,"
    "r_max,status";

std::string format_record(const SweepRecord& r) {
    std::ostringstream os;
    os << r.run_id << ',' << fmt(r.L) << ',' << fmt(r.gamma) << ',' << fmt(r.eps) << ',' << fmt(r.M0) << ','
       << fmt(r.theta) << ',' << fmt(r.chi) << ',' << fmt(r.tau_C) << ',' << fmt(r.tau_C_quarter) << ','
       << fmt(r.tau_D) << ',' << fmt(r.tau_D_lb) << ',' << fmt(r.t3_fitted) << ',' << fmt(r.passthrough_c) << ','
       << (r.masscmp_ok ? 1 : 0) << ',' << r.grid_n << ',' << fmt(r.r_max) << ',' << sanitize(r.status);
    return os.str();
}

void emit_csv(const std::vector<SweepRecord>& records, const fs::path& path) {
    std::string s = std::string(kSweepCsvHeader) + "\n";
    for (const auto& r : records) s += format_record(r) + "\n";
    write_text(path, s);
}

std::vector<SweepRecord> parse_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kSweepCsvHeader)
        throw std::runtime_error(path.string() + ": unexpected CSV header");
    std::vector<SweepRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> c;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) c.push_back(cell);
        if (c.size() != 17) throw std::runtime_error(path.string() + ": bad row '" + line + "'");
        SweepRecord r;
        r.run_id = c[0];
        double* d[] = {&r.L, &r.gamma, &r.eps, &r.M0, &r.theta, &r.chi, &r.tau_C, &r.tau_C_quarter,
                       &r.tau_D, &r.tau_D_lb, &r.t3_fitted, &r.passthrough_c};
        for (std::size_t k = 0; k < 12; ++k) *d[k] = std::stod(c[k + 1]);
        r.masscmp_ok = c[13] == "1";
        r.grid_n = std::stoul(c[14]);
        r.r_max = std::stod(c[15]);
        r.status = c[16];
        out.push_back(r);
    }
    return out;
}

void emit_svg(const ScalingFit& fit, const fs::path& path, const std::string& title) {
    const double W = 640, H = 480, ml = 70, mr = 20, mt = 40, mb = 60;
    double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
    for (std::size_t i = 0; i < fit.x.size(); ++i) {
        x0 = std::min(x0, std::log10(fit.x[i]));
        x1 = std::max(x1, std::log10(fit.x[i]));
        y0 = std::min(y0, std::log10(fit.y[i]));
        y1 = std::max(y1, std::log10(fit.y[i]));
    }
    if (!(x1 > x0)) { x0 -= 0.5; x1 += 0.5; }
    if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
    const double px = 0.05 * (x1 - x0), py = 0.05 * (y1 - y0);
    x0 -= px; x1 += px; y0 -= py; y1 += py;
    auto sx = [&](double lx) { return ml + (lx - x0) / (x1 - x0) * (W - ml - mr); };
    auto sy = [&](double ly) { return H - mb - (ly - y0) / (y1 - y0) * (H - mt - mb); };
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\">\n"
       << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
       << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    const double ln10 = std::log(10.0);
    const double ax0 = x0 + px, ax1 = x1 - px;
    os << "<line x1=\"" << sx(ax0) << "\" y1=\"" << sy((fit.intercept + fit.slope * ax0 * ln10) / ln10) << "\" x2=\""
       << sx(ax1) << "\" y2=\"" << sy((fit.intercept + fit.slope * ax1 * ln10) / ln10)
       << "\" stroke=\"steelblue\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < fit.x.size(); ++i)
        os << "<circle cx=\"" << sx(std::log10(fit.x[i])) << "\" cy=\"" << sy(std::log10(fit.y[i]))
           << "\" r=\"4\" fill=\"crimson\"/>\n";
    auto esc = [](std::string s) {
        std::string o;
        for (char c : s) {
            if (c == '<') o += "&lt;";
            else if (c == '>') o += "&gt;";
            else if (c == '&') o += "&amp;";
            else o += c;
        }
        return o;
    };
    char buf[128];
    std::snprintf(buf, sizeof buf, "slope = %.3f, R^2 = %.4f", fit.slope, fit.r2);
    os << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 20 << "\" font-family=\"sans-serif\" font-size=\"14\">" << buf
       << "</text>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"14\">log10 " << esc(fit.axis) << "</text>\n";
    if (!title.empty())
        os << "<text x=\"" << W / 2 << "\" y=\"25\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
           << esc(title) << "</text>\n";
    os << "</svg>\n";
    write_text(path, os.str());
}

namespace {

void append_profile_rows(std::string& s, double t, const RadialGrid& g, std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) s += fmt(t) + ',' + fmt(g.center(i)) + ',' + fmt(v[i]) + '\n';
}

json grid_json(const RadialGrid& g) {
    return json{{"cells", g.size()}, {"r_max", g.r_max()}, {"max_core_width", g.max_width_below(2.0)}};
}

}  // namespace

void write_fp_trajectory(const FPTrajectory& traj, const fs::path& dir, const std::string& scheme_note) {
    std::string s = "t,r,value\n";
    json frames = json::array();
    for (const auto& f : traj.frames) {
        append_profile_rows(s, f.t, *traj.grid, f.values.values());
        frames.push_back({{"t", f.t}, {"mass", f.mass}, {"sup", f.sup}, {"Z", f.Z}, {"W", f.W}});
    }
    write_text(dir / "frames.csv", s);
    json m;
    m["kind"] = traj.dual ? "dual" : "forward";
    m["potential"] = traj.potential->describe();
    m["gamma"] = traj.potential->coupling();
    m["grid"] = grid_json(*traj.grid);
    m["scheme"] = "exponential-fitting finite volume, implicit Euler, tridiagonal solve";
    if (!scheme_note.empty()) m["dt_policy"] = scheme_note;
    m["steps"] = traj.steps;
    m["frames"] = frames;
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

void write_coupled_trajectory(const CoupledTrajectory& traj, const fs::path& dir) {
    std::string s1 = "t,r,value\n", s2 = s1, sc = s1;
    for (const auto& f : traj.frames) {
        append_profile_rows(s1, f.t, *traj.grid, f.rho1.values());
        append_profile_rows(s2, f.t, *traj.grid, f.rho2.values());
        append_profile_rows(sc, f.t, *traj.grid, f.cum_rho1);
    }
    write_text(dir / "rho1.csv", s1);
    write_text(dir / "rho2.csv", s2);
    write_text(dir / "cum_rho1.csv", sc);
    std::string ser = "t,mass1,mass2\n";
    for (std::size_t k = 0; k < traj.t_series.size(); ++k)
        ser += fmt(traj.t_series[k]) + ',' + fmt(traj.mass1_series[k]) + ',' + fmt(traj.mass2_series[k]) + '\n';
    write_text(dir / "series.csv", ser);
    json m;
    m["params"] = to_json(traj.params);
    m["mode"] = to_string(traj.mode);
    m["grid"] = grid_json(*traj.grid);
    m["scheme"] = "exponential-fitting finite volume for rho1 with implicit reaction sink; exact exponential update for rho2";
    m["steps"] = traj.steps;
    m["max_budget_error"] = traj.max_budget_error;
    m["frame_times"] = json::array();
    for (const auto& f : traj.frames) m["frame_times"].push_back(f.t);
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace chemoscale
