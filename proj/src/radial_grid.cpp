#include "chemoscale/radial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace chemoscale {

namespace {

constexpr double kPi = std::numbers::pi;

void append_uniform(std::vector<double>& edges, double a, double b, double h_target) {
    const auto n = static_cast<std::size_t>(std::ceil((b - a) / h_target - 1e-9));
    for (std::size_t k = 1; k < n; ++k)
        edges.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(n));
    edges.push_back(b);
}

// Widths h0 q^k capped at `cap`, for k = 0..n-1.
double far_total(double h0, double q, double cap, std::size_t n) {
    double s = 0.0, w = h0;
    for (std::size_t k = 0; k < n; ++k) {
        s += std::min(w, cap);
        w *= q;
    }
    return s;
}

}  // namespace

RadialGrid::RadialGrid(std::vector<double> edges) : edges_(std::move(edges)) {
    if (edges_.size() < 2) throw ConfigError("RadialGrid: need at least one cell");
    if (edges_.front() != 0.0) throw ConfigError("RadialGrid: first edge must be exactly 0");
    for (std::size_t j = 1; j < edges_.size(); ++j)
        if (!(edges_[j] > edges_[j - 1]))
            throw ConfigError("RadialGrid: edges must be strictly increasing");
    const std::size_t n = edges_.size() - 1;
    centers_.resize(n);
    volumes_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = edges_[i], b = edges_[i + 1];
        centers_[i] = 0.5 * (a + b);
        volumes_[i] = kPi * (b - a) * (b + a);
    }
}

RadialGrid RadialGrid::uniform(double r_max, std::size_t n_cells) {
    if (!(r_max > 0.0) || n_cells == 0) throw ConfigError("RadialGrid::uniform: bad size");
    std::vector<double> e(n_cells + 1);
    for (std::size_t j = 0; j <= n_cells; ++j)
        e[j] = r_max * static_cast<double>(j) / static_cast<double>(n_cells);
    e.back() = r_max;
    return RadialGrid(std::move(e));
}

std::size_t RadialGrid::find_edge(double r) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), r * (1.0 - 1e-12));
    if (it == edges_.end()) return npos;
    if (std::abs(*it - r) <= 1e-12 * std::max(1.0, std::abs(r)))
        return static_cast<std::size_t>(it - edges_.begin());
    return npos;
}

std::size_t RadialGrid::cell_of(double r) const {
    if (r <= 0.0) return 0;
    if (r >= r_max()) return size() - 1;
    auto it = std::upper_bound(edges_.begin(), edges_.end(), r);
    return static_cast<std::size_t>(it - edges_.begin()) - 1;
}

double RadialGrid::total_volume() const {
    double s = 0.0;
    for (double v : volumes_) s += v;
    return s;
}

double RadialGrid::max_width_below(double r) const {
    double h = 0.0;
    for (std::size_t i = 0; i < size() && edges_[i] < r; ++i) h = std::max(h, width(i));
    return h;
}

bool RadialGrid::same_as(const RadialGrid& other) const {
    return this == &other || edges_ == other.edges_;
}

GridPtr build_graded_grid(double r_max, std::size_t n_core, std::size_t n_far, double gamma,
                          double max_far_width) {
    if (!(r_max >= 2.0)) throw ConfigError("build_graded_grid: r_max must be >= 2");
    if (n_core < 16 || n_far < 16) throw ConfigError("build_graded_grid: n_core, n_far must be >= 16");
    if (!(gamma > 0.0)) throw ConfigError("build_graded_grid: gamma must be positive");
    if (!(max_far_width > 0.0)) throw ConfigError("build_graded_grid: max_far_width must be positive");

    const double h = std::min({2.0 / static_cast<double>(n_core), 1.0 / (4.0 * gamma), 1.0 / 64.0});
    std::vector<double> e{0.0};
    append_uniform(e, 0.0, kPlateauRadius, h);
    append_uniform(e, kPlateauRadius, kShoulderRadius, h);
    append_uniform(e, kShoulderRadius, kUnitRadius, h);
    append_uniform(e, kUnitRadius, 2.0, h);

    const double len = r_max - 2.0;
    if (len > 0.0) {
        constexpr double q_max = 1.05;
        const double h_core = 1.0 / std::ceil(1.0 / h - 1e-9);  // spacing actually used on [1, 2]
        const double h0 = h_core * q_max;
        const double cap = std::max(max_far_width, h0);
        std::size_t n = n_far;
        double q = 1.0;
        std::vector<double> w;
        if (static_cast<double>(n) * std::min(h0, cap) >= len) {
            w.assign(n, len / static_cast<double>(n));
        } else {
            if (far_total(h0, q_max, cap, n) < len) {
                while (far_total(h0, q_max, cap, n) < len) ++n;
                q = q_max;
            } else {
                double lo = 1.0, hi = q_max;
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (far_total(h0, mid, cap, n) < len ? lo : hi) = mid;
                }
                q = hi;
            }
            double wk = h0;
            for (std::size_t k = 0; k < n; ++k) {
                w.push_back(std::min(wk, cap));
                wk *= q;
            }
            double s = 0.0;
            for (double x : w) s += x;
            for (double& x : w) x *= len / s;
        }
        double r = 2.0;
        for (std::size_t k = 0; k + 1 < w.size(); ++k) {
            r += w[k];
            e.push_back(r);
        }
        e.push_back(r_max);
    }
    return std::make_shared<const RadialGrid>(std::move(e));
}

const char* to_string(ProfileKind kind) {
    switch (kind) {
        case ProfileKind::Density: return "Density";
        case ProfileKind::MassFunction: return "MassFunction";
        case ProfileKind::Potential: return "Potential";
        case ProfileKind::Field: return "Field";
        case ProfileKind::EdgeField: return "EdgeField";
    }
    return "?";
}

bool lives_on_edges(ProfileKind kind) {
    return kind == ProfileKind::MassFunction || kind == ProfileKind::EdgeField;
}

double negativity_tolerance(std::span<const double> values) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return 1e-12 * m;
}

RadialProfile::RadialProfile(GridPtr grid, std::vector<double> values, ProfileKind kind)
    : grid_(std::move(grid)), values_(std::move(values)), kind_(kind) {
    if (!grid_) throw ConfigError("RadialProfile: null grid");
    const std::size_t expect = lives_on_edges(kind_) ? grid_->size() + 1 : grid_->size();
    if (values_.size() != expect) {
        std::ostringstream os;
        os << "RadialProfile(" << to_string(kind_) << "): expected " << expect << " values, got "
           << values_.size();
        throw ConfigError(os.str());
    }
}

double RadialProfile::max_value() const { return *std::max_element(values_.begin(), values_.end()); }
double RadialProfile::min_value() const { return *std::min_element(values_.begin(), values_.end()); }

void RadialProfile::check_invariants() const {
    for (double v : values_)
        if (!std::isfinite(v)) throw SchemeError(std::string(to_string(kind_)) + ": non-finite value");
    if (kind_ == ProfileKind::Density) {
        const double tol = negativity_tolerance(values_);
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (values_[i] < -tol) {
                std::ostringstream os;
                os << "Density negative at r=" << grid_->center(i) << ": " << values_[i];
                throw SchemeError(os.str());
            }
    } else if (kind_ == ProfileKind::MassFunction) {
        if (values_.front() != 0.0) throw SchemeError("MassFunction: M(0) must be 0");
        const double tol = negativity_tolerance(values_);
        for (std::size_t j = 1; j < values_.size(); ++j)
            if (values_[j] < values_[j - 1] - tol) {
                std::ostringstream os;
                os << "MassFunction decreasing at r=" << grid_->edge(j);
                throw SchemeError(os.str());
            }
    }
}

namespace {
void require_kind(const RadialProfile& p, ProfileKind k, const char* op) {
    if (p.kind() != k)
        throw ConfigError(std::string(op) + ": expected " + to_string(k) + ", got " + to_string(p.kind()));
}
}  // namespace

double integrate(const RadialProfile& density) {
    require_kind(density, ProfileKind::Density, "integrate");
    const auto vol = density.grid().volumes();
    double s = 0.0;
    for (std::size_t i = 0; i < vol.size(); ++i) s += density[i] * vol[i];
    return s;
}

RadialProfile to_mass_function(const RadialProfile& density) {
    require_kind(density, ProfileKind::Density, "to_mass_function");
    const auto vol = density.grid().volumes();
    std::vector<double> m(vol.size() + 1, 0.0);
    for (std::size_t i = 0; i < vol.size(); ++i) m[i + 1] = m[i] + density[i] * vol[i];
    return RadialProfile(density.grid_ptr(), std::move(m), ProfileKind::MassFunction);
}

RadialProfile from_mass_function(const RadialProfile& mass) {
    require_kind(mass, ProfileKind::MassFunction, "from_mass_function");
    const auto vol = mass.grid().volumes();
    const double tol = negativity_tolerance(mass.values());
    std::vector<double> d(vol.size());
    for (std::size_t i = 0; i < vol.size(); ++i) {
        const double dm = mass[i + 1] - mass[i];
        if (dm < -tol) {
            std::ostringstream os;
            os << "from_mass_function: decreasing mass function at r=" << mass.grid().edge(i + 1);
            throw ConfigError(os.str());
        }
        d[i] = std::max(dm, 0.0) / vol[i];
    }
    return RadialProfile(mass.grid_ptr(), std::move(d), ProfileKind::Density);
}

double mass_inside(const RadialProfile& density, double r) {
    require_kind(density, ProfileKind::Density, "mass_inside");
    const auto& g = density.grid();
    const std::size_t j = g.find_edge(r);
    if (j == RadialGrid::npos) throw ConfigError("mass_inside: radius is not a grid edge");
    double s = 0.0;
    for (std::size_t i = 0; i < j; ++i) s += density[i] * g.volume(i);
    return s;
}

}  // namespace chemoscale
