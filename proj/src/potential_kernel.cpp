#include "chemoscale/potential_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace chemoscale {

namespace {

constexpr double kPi = std::numbers::pi;

// Antiderivative of s log s, vanishing at 0.
double slogs_primitive(double s) {
    if (s <= 0.0) return 0.0;
    return 0.5 * s * s * std::log(s) - 0.25 * s * s;
}

}  // namespace

AnnulusPotential::AnnulusPotential(double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0)) throw ConfigError("annulus potential: gamma must be positive");
}

double AnnulusPotential::H(double r) const {
    if (r < kPlateauRadius) return gamma_ / 8.0 * (1.0 - std::log(2.0));
    if (r < kUnitRadius) return gamma_ / 4.0 * (std::log(r) + 1.0 - r * r);
    return -gamma_ / 4.0 * std::log(r);
}

double AnnulusPotential::dH(double r) const {
    if (r < kPlateauRadius) return 0.0;
    if (r < kUnitRadius) return gamma_ / 4.0 * (1.0 / r - 2.0 * r);
    return -gamma_ / (4.0 * r);
}

std::string AnnulusPotential::describe() const {
    std::ostringstream os;
    os << "annulus(gamma=" << gamma_ << ")";
    return os.str();
}

AnnulusPotential annulus_potential(double gamma) { return AnnulusPotential(gamma); }

DensityPotential::DensityPotential(const RadialProfile& g, double chi)
    : grid_(g.grid_ptr()), g_(g.values().begin(), g.values().end()), chi_(chi) {
    if (g.kind() != ProfileKind::Density) throw ConfigError("DensityPotential: expected a Density profile");
    if (!std::isfinite(chi) || chi < 0.0) throw ConfigError("DensityPotential: chi must be >= 0");
    const std::size_t n = grid_->size();
    if (g_.back() != 0.0)
        throw ConfigError("inverse Laplacian: density is not compactly supported on the grid");
    prefix_.assign(n + 1, 0.0);
    tail_.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = grid_->edge(i), b = grid_->edge(i + 1);
        prefix_[i + 1] = prefix_[i] + g_[i] * 0.5 * (b - a) * (b + a);
    }
    for (std::size_t i = n; i-- > 0;) {
        const double a = grid_->edge(i), b = grid_->edge(i + 1);
        tail_[i] = tail_[i + 1] + g_[i] * (slogs_primitive(b) - slogs_primitive(a));
    }
    coupling_ = chi_ * *std::max_element(g_.begin(), g_.end());
}

double DensityPotential::prefix(double r) const {
    if (r <= 0.0) return 0.0;
    if (r >= grid_->r_max()) return prefix_.back();
    const std::size_t k = grid_->cell_of(r);
    const double a = grid_->edge(k);
    return prefix_[k] + g_[k] * 0.5 * (r - a) * (r + a);
}

double DensityPotential::H(double r) const {
    if (r <= 0.0) return -chi_ * tail_[0];
    if (r >= grid_->r_max()) return -chi_ * std::log(r) * prefix_.back();
    const std::size_t k = grid_->cell_of(r);
    const double a = grid_->edge(k), b = grid_->edge(k + 1);
    const double m = prefix_[k] + g_[k] * 0.5 * (r - a) * (r + a);
    const double tail = g_[k] * (slogs_primitive(b) - slogs_primitive(r)) + tail_[k + 1];
    return chi_ * (-std::log(r) * m - tail);
}

double DensityPotential::dH(double r) const {
    if (r <= 0.0) return 0.0;
    return -chi_ * prefix(r) / r;
}

RadialProfile inverse_laplacian_radial(const RadialProfile& g, double chi) {
    DensityPotential pot(g, chi);
    return RadialProfile(g.grid_ptr(), sample_potential(pot, g.grid()), ProfileKind::Potential);
}

RadialProfile radial_drift(const RadialProfile& g, double chi) {
    DensityPotential pot(g, chi);
    return RadialProfile::sample(g.grid_ptr(), [&](double r) { return pot.dH(r); }, ProfileKind::EdgeField);
}

std::vector<double> sample_potential(const RadialPotential& pot, const RadialGrid& grid) {
    std::vector<double> h(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) h[i] = pot.H(grid.center(i));
    return h;
}

WeightSpec::WeightSpec(WeightKind kind, double gamma)
    : kind_(kind), gamma_(gamma), annulus_(gamma > 0.0 ? gamma : 1.0) {
    if (!(gamma > 2.0)) throw ConfigError("weight: gamma must exceed 2");
    if (kind == WeightKind::GroundState) {
        r1_ = kPlateauRadius;
        r2_ = kShoulderRadius;
    } else {
        r1_ = 2.0 / std::sqrt(gamma);
        r2_ = 1.0;
        if (!(r1_ < r2_)) throw ConfigError("power weight: gamma must exceed 4");
    }
    c_ = fit_weight_constants(*this);
    const double res = max_condition_residual();
    if (res > 0.0) {
        std::ostringstream os;
        os << "weight conditions fail for " << describe() << " (residual " << res << ")";
        throw SchemeError(os.str());
    }
}

double WeightSpec::log_weight(double r) const {
    if (kind_ == WeightKind::GroundState) return annulus_.H(r);
    return -0.5 * gamma_ * std::log1p(r * r);
}

double WeightSpec::dlog_weight(double r) const {
    if (kind_ == WeightKind::GroundState) return annulus_.dH(r);
    return -gamma_ * r / (1.0 + r * r);
}

double WeightSpec::far_gradient_factor(double r) const {
    return kind_ == WeightKind::GroundState ? r * r : 1.0 + r * r;
}

std::string WeightSpec::describe() const {
    std::ostringstream os;
    os << (kind_ == WeightKind::GroundState ? "ground_state" : "power") << "(gamma=" << gamma_ << ")";
    return os.str();
}

namespace {

struct ConditionScan {
    double plateau_spread = 0.0;  // max - min of log w on [0, r1]
    double inner_min = HUGE_VAL;  // min of -w'/(gamma (r - r1) w) on (r1, r2]
    double far_min = HUGE_VAL;    // min of -r w'/(gamma w) on [r2, r_max]
};

ConditionScan scan_conditions(const WeightSpec& w, double r_sample_max, std::size_t n) {
    ConditionScan s;
    const double g = w.gamma(), r1 = w.r1(), r2 = w.r2();
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (std::size_t k = 0; k <= n; ++k) {
        const double r = r1 * static_cast<double>(k) / static_cast<double>(n);
        const double lw = w.log_weight(std::min(r, std::nextafter(r1, 0.0)));
        lo = std::min(lo, lw);
        hi = std::max(hi, lw);
    }
    s.plateau_spread = hi - lo;
    for (std::size_t k = 1; k <= n; ++k) {
        const double r = r1 + (r2 - r1) * static_cast<double>(k) / static_cast<double>(n);
        s.inner_min = std::min(s.inner_min, -w.dlog_weight(r) / (g * (r - r1)));
    }
    for (std::size_t k = 0; k <= n; ++k) {
        const double r = r2 + (r_sample_max - r2) * static_cast<double>(k) / static_cast<double>(n);
        s.far_min = std::min(s.far_min, -r * w.dlog_weight(r) / g);
    }
    return s;
}

}  // namespace

WeightConstants fit_weight_constants(const WeightSpec& w, double r_sample_max, std::size_t n_samples) {
    const auto s = scan_conditions(w, r_sample_max, n_samples);
    WeightConstants c;
    c.C0 = std::exp(s.plateau_spread);
    c.C1 = s.inner_min * (1.0 - 1e-12);
    c.C2 = s.far_min * (1.0 - 1e-12);
    return c;
}

double WeightSpec::max_condition_residual(double r_sample_max) const {
    const auto s = scan_conditions(*this, r_sample_max, 200000);
    const double tol = 1e-12;
    double res = s.plateau_spread - std::log(c_.C0) - tol;
    res = std::max(res, c_.C1 - s.inner_min - tol);
    res = std::max(res, c_.C2 - s.far_min - tol);
    if (!(c_.C1 > 0.0) || !(c_.C2 > 0.0)) res = std::max(res, 1.0);
    return res;
}

WeightSpec ground_state_weight(double gamma) { return WeightSpec(WeightKind::GroundState, gamma); }
WeightSpec power_weight(double gamma) { return WeightSpec(WeightKind::Power, gamma); }

ConcentrationWitness concentration_compare(const RadialProfile& g1, const RadialProfile& g2, double rel_tol) {
    if (!g1.grid().same_as(g2.grid())) throw ConfigError("concentration_compare: grid mismatch");
    const auto m1 = to_mass_function(g1);
    const auto m2 = to_mass_function(g2);
    double scale = 0.0;
    for (std::size_t j = 0; j < m1.size(); ++j) scale = std::max({scale, std::abs(m1[j]), std::abs(m2[j])});
    const double tol = rel_tol * scale;
    ConcentrationWitness w;
    w.ordering = Concentration::MoreConcentrated;
    for (std::size_t j = 0; j < m1.size(); ++j) {
        const double gap = m2[j] - m1[j];
        if (gap > tol) {
            if (!w.first_violation) w.first_violation = g1.grid().edge(j);
            w.ordering = Concentration::Incomparable;
            w.max_violation = std::max(w.max_violation, gap);
        }
    }
    if (w.ordering == Concentration::MoreConcentrated && g1.values().back() == 0.0 && g2.values().back() == 0.0) {
        const auto d1 = radial_drift(g1, 1.0);
        const auto d2 = radial_drift(g2, 1.0);
        const auto& grid = g1.grid();
        for (std::size_t j = 1; j < d1.size(); ++j) {
            const double t = tol / (2.0 * kPi * grid.edge(j));
            if (d1[j] > d2[j] + t || d2[j] > t)
                throw SchemeError("concentration_compare: drift ordering fails for ordered densities");
        }
    }
    return w;
}

}  // namespace chemoscale
