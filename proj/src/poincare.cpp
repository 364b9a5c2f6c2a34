#include "chemoscale/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/math/differentiation/finite_difference.hpp>
#include <boost/math/quadrature/gauss.hpp>

namespace chemoscale {

namespace {

constexpr double kPi = std::numbers::pi;

double ratio(double num, double den) {
    if (!(num > 0.0)) return 0.0;
    if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
    return num / den;
}

// Gauss-Legendre nodes/weights mapped to [a, b].
template <unsigned N, class Fn>
void for_gauss_points(double a, double b, Fn&& fn) {
    using Q = boost::math::quadrature::gauss<double, N>;
    const auto& x = Q::abscissa();
    const auto& w = Q::weights();
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] == 0.0) {
            fn(mid, w[k] * half);
            continue;
        }
        fn(mid - half * x[k], w[k] * half);
        fn(mid + half * x[k], w[k] * half);
    }
}

void require_edge(const RadialGrid& g, double r, const char* name) {
    if (g.find_edge(r) == RadialGrid::npos) {
        std::ostringstream os;
        os << "mode_functionals: breakpoint " << name << "=" << r << " is not a grid edge";
        throw ConfigError(os.str());
    }
}

}  // namespace

ModeProfile::ModeProfile(int n_, std::function<double(double)> value_, std::string label_,
                         std::function<double(double)> deriv_)
    : n(n_), value(std::move(value_)), deriv(std::move(deriv_)), label(std::move(label_)) {
    if (n < 0) throw ConfigError("ModeProfile: mode index must be >= 0");
}

double ModeProfile::d(double r) const {
    if (deriv) return deriv(r);
    return boost::math::differentiation::finite_difference_derivative<decltype(value), double, 6>(value, r);
}

BlockFunctionals& BlockFunctionals::operator+=(const BlockFunctionals& o) {
    if (log_scale != o.log_scale) throw ConfigError("BlockFunctionals: mismatched scales");
    I1 += o.I1;
    I2 += o.I2;
    I3 += o.I3;
    J1 += o.J1;
    J2 += o.J2;
    J3 += o.J3;
    I3R += o.I3R;
    J3R += o.J3R;
    I_mean += o.I_mean;
    J_inner_far += o.J_inner_far;
    if (o.R) R = o.R;
    return *this;
}

GridPtr build_panel_grid(const WeightSpec& w, double r_max, const std::vector<double>& extra) {
    if (!(r_max > 2.0)) throw ConfigError("build_panel_grid: r_max must exceed 2");
    std::set<double> br{0.0, w.r1(), w.r2(), kPlateauRadius, kShoulderRadius, kUnitRadius, 2.0, r_max};
    for (double e : extra)
        if (e > 0.0 && e < r_max) br.insert(e);
    const double h_core = std::min(1.0 / 256.0, 1.0 / (8.0 * w.gamma()));
    std::vector<double> edges{0.0};
    for (auto it = std::next(br.begin()); it != br.end(); ++it) {
        const double a = edges.back(), b = *it;
        if (b - a < 1e-14) continue;
        const double h = a < 2.0 ? h_core : (a < 10.0 ? 0.05 : 0.25);
        const auto n = static_cast<std::size_t>(std::ceil((b - a) / h - 1e-9));
        for (std::size_t k = 1; k < n; ++k) edges.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(n));
        edges.push_back(b);
    }
    return std::make_shared<const RadialGrid>(std::move(edges));
}

BlockFunctionals mode_functionals(const ModeProfile& m, const WeightSpec& w, const RadialGrid& grid,
                                  std::optional<double> R) {
    const double r1 = w.r1(), r2 = w.r2();
    require_edge(grid, r1, "r1");
    require_edge(grid, r2, "r2");
    if (R) {
        if (!(*R > r2)) throw ConfigError("mode_functionals: R must exceed r2");
        require_edge(grid, *R, "R");
    }
    BlockFunctionals b;
    b.R = R;
    b.log_scale = w.log_weight(0.0);
    const double ang = m.n == 0 ? 2.0 * kPi : kPi;
    const double n2 = static_cast<double>(m.n) * m.n;
    const double a = m.n == 0 ? m.value(r1) : 0.0;

    // weighted mean of the radial mode
    double fbar = 0.0;
    if (m.n == 0) {
        double s0 = 0.0, s1 = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            for_gauss_points<10>(grid.edge(i), grid.edge(i + 1), [&](double r, double q) {
                const double wr = q * std::exp(w.log_weight(r) - b.log_scale) * r;
                s0 += wr;
                s1 += wr * m.value(r);
            });
        fbar = s1 / s0;
    }

    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double lo = grid.edge(i), hi = grid.edge(i + 1), mid = 0.5 * (lo + hi);
        const int block = mid < r1 ? 1 : (mid < r2 ? 2 : 3);
        const bool in_R = R && mid < *R;
        for_gauss_points<10>(lo, hi, [&](double r, double q) {
            const double wr = ang * q * std::exp(w.log_weight(r) - b.log_scale) * r;
            const double f = m.value(r), df = m.d(r);
            const double dev = f - a;
            const double grad2 = df * df + (m.n ? n2 / (r * r) * f * f : 0.0);
            b.I_mean += wr * (f - fbar) * (f - fbar);
            if (block == 1) {
                b.I1 += wr * dev * dev;
                b.J1 += wr * grad2;
            } else if (block == 2) {
                b.I2 += wr * dev * dev;
                b.J2 += wr * grad2;
            } else {
                const double j3 = wr * grad2 * w.far_gradient_factor(r);
                b.I3 += wr * dev * dev;
                b.J3 += j3;
                if (in_R) {
                    b.I3R += wr * dev * dev;
                    b.J3R += j3;
                }
            }
            if (block != 3) b.J_inner_far += wr * grad2 * w.far_gradient_factor(r);
        });
    }
    return b;
}

BlockFunctionals mode_functionals(const std::vector<ModeProfile>& modes, const WeightSpec& w, const RadialGrid& grid,
                                  std::optional<double> R) {
    if (modes.empty()) throw ConfigError("mode_functionals: no modes");
    BlockFunctionals b = mode_functionals(modes.front(), w, grid, R);
    for (std::size_t k = 1; k < modes.size(); ++k) b += mode_functionals(modes[k], w, grid, R);
    return b;
}

BlockConstants block_constants(const BlockFunctionals& b, double g) {
    BlockConstants c;
    c.C1 = ratio(b.I1, b.J1);
    c.C2 = g * ratio(b.I2 - 0.25 * b.I1, b.J1 + b.J2);
    c.C3 = g * g * ratio(b.I3 - 0.25 * b.I2, b.J2 + b.J3);
    c.C_combined = ratio(b.I_mean, b.J1 + b.J2 / g + b.J3 / (g * g));
    c.C3R = g * g * ratio(b.I3R - 0.25 * b.I2, b.J2 + b.J3R);
    c.C_R = ratio(b.I_R(), b.J1 + b.J2 / g + b.J3R / (g * g));
    c.centering_ok = b.I_mean <= b.I_tilde() * (1.0 + 1e-12) + 1e-300;
    c.margin2 = b.I2 > 0.0 ? (b.I2 - 0.25 * b.I1) / b.I2 : 0.0;
    c.margin3 = b.I3 > 0.0 ? (b.I3 - 0.25 * b.I2) / b.I3 : 0.0;
    return c;
}

BlockConstants verify_block_inequalities(const std::vector<ModeProfile>& modes, const WeightSpec& w,
                                         const RadialGrid& grid) {
    return block_constants(mode_functionals(modes, w, grid), w.gamma());
}

BlockConstants verify_combined(const std::vector<ModeProfile>& modes, const WeightSpec& w, const RadialGrid& grid) {
    return block_constants(mode_functionals(modes, w, grid), w.gamma());
}

BlockConstants verify_truncated(const std::vector<ModeProfile>& modes, const WeightSpec& w, const RadialGrid& grid,
                                double R) {
    if (!(R > w.r2())) throw ConfigError("verify_truncated: R must exceed r2");
    return block_constants(mode_functionals(modes, w, grid, R), w.gamma());
}

PowerConstants verify_power_weight(const std::vector<ModeProfile>& modes, double gamma, const RadialGrid& grid) {
    const auto v = power_weight(gamma);
    const auto b = mode_functionals(modes, v, grid);
    PowerConstants p;
    p.lhs = b.I_mean;
    p.j_in = b.J1 + b.J2;
    p.j_out = b.J3;
    p.C = ratio(p.lhs, p.j_in / gamma + p.j_out / (gamma * gamma));
    p.C_bl = ratio(p.lhs, (b.J_inner_far + b.J3) / gamma);
    return p;
}

std::vector<TestFunction> battery_v1() {
    struct Base {
        std::string id;
        std::function<double(double)> f;
    };
    std::vector<Base> bases;
    for (double c : {0.0, 1.0, 2.0, 4.0})
        for (double wd : {0.25, 0.5, 1.0}) {
            std::ostringstream os;
            os << "gauss_c" << c << "_w" << wd;
            bases.push_back({os.str(), [c, wd](double r) { return std::exp(-(r - c) * (r - c) / (wd * wd)); }});
        }
    const double ann[3][2] = {{0.5, 1.0}, {1.0, 2.0}, {2.0, 4.0}};
    for (const auto& ab : ann) {
        const double a = ab[0], b = ab[1], del = 0.1;
        std::ostringstream os;
        os << "annulus_" << a << "_" << b;
        bases.push_back({os.str(), [a, b, del](double r) {
                             return 0.5 * (std::tanh((r - a) / del) - std::tanh((r - b) / del));
                         }});
    }
    for (int k = 1; k <= 3; ++k) {
        bases.push_back({"sine_k" + std::to_string(k), [k](double r) {
                             return std::cos(0.5 * kPi * k * r) * std::exp(-r * r / 8.0);
                         }});
    }
    std::vector<TestFunction> out;
    for (const auto& b : bases)
        for (int n = 0; n <= 2; ++n) {
            auto f = b.f;
            auto fn = [f, n](double r) { return f(r) * std::pow(std::tanh(r / 0.25), n); };
            const std::string id = b.id + "_n" + std::to_string(n);
            out.push_back({id, {ModeProfile(n, fn, id)}});
        }
    return out;
}

namespace {

struct Tri {
    std::vector<double> lo, d, up;
};

// Thomas solve; does not modify the matrix.
std::vector<double> tri_solve(const Tri& A, std::vector<double> rhs, std::size_t first) {
    const std::size_t n = A.d.size();
    std::vector<double> c(n, 0.0), dd(n, 0.0);
    dd[first] = A.d[first];
    for (std::size_t i = first + 1; i < n; ++i) {
        const double m = A.lo[i] / dd[i - 1];
        dd[i] = A.d[i] - m * A.up[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= dd[n - 1];
    for (std::size_t i = n - 1; i-- > first;) rhs[i] = (rhs[i] - A.up[i] * rhs[i + 1]) / dd[i];
    for (std::size_t i = 0; i < first; ++i) rhs[i] = 0.0;
    return rhs;
}

std::vector<double> tri_mul(const Tri& A, const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = A.d[i] * x[i];
        if (i > 0) y[i] += A.lo[i] * x[i - 1];
        if (i + 1 < n) y[i] += A.up[i] * x[i + 1];
    }
    return y;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

EigenResult best_constant_1d(const std::vector<double>& nodes, const std::function<double(double)>& m,
                             const std::function<double(double)>& k, const std::function<double(double)>& z,
                             bool dirichlet_left, bool dirichlet_right, bool deflate, std::size_t max_iters,
                             double tol) {
    const std::size_t N = nodes.size();
    if (N < 4) throw ConfigError("best_constant_1d: need at least 4 nodes");
    Tri M{std::vector<double>(N, 0.0), std::vector<double>(N, 0.0), std::vector<double>(N, 0.0)};
    Tri K = M;
    for (std::size_t e = 0; e + 1 < N; ++e) {
        const double a = nodes[e], b = nodes[e + 1], h = b - a;
        double m00 = 0, m01 = 0, m11 = 0, kk = 0, z00 = 0, z01 = 0, z11 = 0;
        for_gauss_points<4>(a, b, [&](double r, double q) {
            const double p1 = (r - a) / h, p0 = 1.0 - p1;
            const double mw = q * m(r), zw = z ? q * z(r) : 0.0;
            m00 += mw * p0 * p0;
            m01 += mw * p0 * p1;
            m11 += mw * p1 * p1;
            z00 += zw * p0 * p0;
            z01 += zw * p0 * p1;
            z11 += zw * p1 * p1;
            kk += q * k(r) / (h * h);
        });
        M.d[e] += m00;
        M.d[e + 1] += m11;
        M.up[e] += m01;
        M.lo[e + 1] += m01;
        K.d[e] += kk + z00;
        K.d[e + 1] += kk + z11;
        K.up[e] += -kk + z01;
        K.lo[e + 1] += -kk + z01;
    }
    // Dirichlet: decouple the pinned node
    auto pin = [&](std::size_t i) {
        M.d[i] = 0.0;
        K.d[i] = 1.0;
        if (i > 0) {
            M.lo[i] = K.lo[i] = 0.0;
            M.up[i - 1] = K.up[i - 1] = 0.0;
        }
        if (i + 1 < N) {
            M.up[i] = K.up[i] = 0.0;
            M.lo[i + 1] = K.lo[i + 1] = 0.0;
        }
    };
    if (dirichlet_left) pin(0);
    if (dirichlet_right) pin(N - 1);
    const bool singular = deflate && !dirichlet_left && !dirichlet_right;
    std::vector<double> ones(N, 1.0), M1 = tri_mul(M, ones);
    const double oMo = dot(ones, M1);

    auto project = [&](std::vector<double>& x) {
        if (!deflate) return;
        const double c = dot(ones, tri_mul(M, x)) / oMo;
        for (double& v : x) v -= c;
    };

    EigenResult res;
    res.nodes = nodes;
    std::vector<double> x(N);
    const double L = nodes.back() - nodes.front();
    for (std::size_t i = 0; i < N; ++i) {
        const double s = (nodes[i] - nodes.front()) / L;
        x[i] = s + 0.3 * std::sin(7.0 * s) + 0.1 * s * s;
    }
    if (dirichlet_left) x[0] = 0.0;
    if (dirichlet_right) x[N - 1] = 0.0;
    project(x);
    double prev = 0.0;
    std::size_t stable = 0;
    for (std::size_t it = 1; it <= max_iters; ++it) {
        auto b = tri_mul(M, x);
        if (singular) {
            const double c = dot(ones, b) / oMo;
            for (std::size_t i = 0; i < N; ++i) b[i] -= c * M1[i];
        }
        auto y = tri_solve(K, b, singular ? 1 : 0);
        if (dirichlet_left) y[0] = 0.0;
        if (dirichlet_right) y[N - 1] = 0.0;
        project(y);
        const auto My = tri_mul(M, y), Ky = tri_mul(K, y);
        const double num = dot(y, My), den = dot(y, Ky);
        const double val = num / den;
        const double nrm = std::sqrt(num);
        for (std::size_t i = 0; i < N; ++i) x[i] = y[i] / nrm;
        res.iterations = it;
        res.value = val;
        if (std::abs(val - prev) <= tol * std::abs(val)) {
            if (++stable >= 3) {
                res.converged = true;
                break;
            }
        } else {
            stable = 0;
        }
        prev = val;
    }
    // residual of K x = (1/value) M x
    {
        const auto Kx = tri_mul(K, x), Mx = tri_mul(M, x);
        double r2 = 0.0, k2 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double ri = Kx[i] - Mx[i] / res.value;
            r2 += ri * ri;
            k2 += Kx[i] * Kx[i];
        }
        res.residual = k2 > 0.0 ? std::sqrt(r2 / k2) : 0.0;
    }
    res.extremizer = x;
    return res;
}

EigenResult best_constant(const WeightSpec& w, const RadialGrid& grid, Region region, int n) {
    const double r1 = w.r1(), r2 = w.r2();
    const double n2 = static_cast<double>(n) * n;
    std::vector<double> nodes;
    if (region == Region::Core) {
        if (grid.find_edge(r1) == RadialGrid::npos) throw ConfigError("best_constant: r1 is not a grid edge");
        for (double e : grid.edges())
            if (e <= r1 * (1.0 + 1e-14)) nodes.push_back(e);
        const double s = w.log_weight(0.0);
        auto mw = [&w, s](double r) { return r * std::exp(w.log_weight(r) - s); };
        auto zw = [&w, s, n2](double r) { return n2 / r * std::exp(w.log_weight(r) - s); };
        return best_constant_1d(nodes, mw, mw, n ? std::function<double(double)>(zw) : nullptr, n > 0, false, n == 0);
    }
    if (grid.find_edge(r2) == RadialGrid::npos) throw ConfigError("best_constant: r2 is not a grid edge");
    for (double e : grid.edges())
        if (e >= r2 * (1.0 - 1e-14)) nodes.push_back(e);
    const double s = w.log_weight(r2);
    auto mw = [&w, s](double r) { return r * std::exp(w.log_weight(r) - s); };
    auto kw = [&w, s](double r) { return r * w.far_gradient_factor(r) * std::exp(w.log_weight(r) - s); };
    auto zw = [&w, s, n2](double r) { return n2 / r * w.far_gradient_factor(r) * std::exp(w.log_weight(r) - s); };
    return best_constant_1d(nodes, mw, kw, n ? std::function<double(double)>(zw) : nullptr, true, false, false);
}

}  // namespace chemoscale
