#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chemoscale/radial_grid.hpp"

namespace chemoscale {

/// A radial potential H(r) with its derivative.
class RadialPotential {
public:
    virtual ~RadialPotential() = default;
    virtual double H(double r) const = 0;
    virtual double dH(double r) const = 0;
    /// Coupling strength used in bounds that scale with gamma (0 for the zero potential).
    virtual double coupling() const = 0;
    virtual std::string describe() const = 0;

    double log_weight(double r) const { return H(r); }
};

using PotentialPtr = std::shared_ptr<const RadialPotential>;

class ZeroPotential final : public RadialPotential {
public:
    double H(double) const override { return 0.0; }
    double dH(double) const override { return 0.0; }
    double coupling() const override { return 0.0; }
    std::string describe() const override { return "zero"; }
};

/// H = gamma (-Delta)^{-1}(chi_{B1} - chi_{B_{1/sqrt2}}), additive constant zero.
class AnnulusPotential final : public RadialPotential {
public:
    explicit AnnulusPotential(double gamma);
    double gamma() const { return gamma_; }
    double H(double r) const override;
    double dH(double r) const override;
    double coupling() const override { return gamma_; }
    std::string describe() const override;

private:
    double gamma_;
};

AnnulusPotential annulus_potential(double gamma);

/// Exact chi (-Delta)^{-1} g for a piecewise-constant density g on its grid.
class DensityPotential final : public RadialPotential {
public:
    DensityPotential(const RadialProfile& g, double chi);
    double H(double r) const override;
    double dH(double r) const override;
    double coupling() const override { return coupling_; }
    std::string describe() const override { return "density"; }
    double chi() const { return chi_; }
    /// int_0^r g s ds (no 2 pi).
    double prefix(double r) const;

private:
    GridPtr grid_;
    std::vector<double> g_;
    std::vector<double> prefix_;  // at edges
    std::vector<double> tail_;    // int_{r_j}^inf (log s) g s ds at edges
    double chi_;
    double coupling_;
};

/// Potential values at cell centers.
RadialProfile inverse_laplacian_radial(const RadialProfile& g, double chi);
/// dH/dr at edges; 0 at r = 0.
RadialProfile radial_drift(const RadialProfile& g, double chi);

/// Samples a potential at cell centers.
std::vector<double> sample_potential(const RadialPotential& pot, const RadialGrid& grid);

enum class WeightKind { GroundState, Power };

struct WeightConstants {
    double C0 = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
};

/// Weight w = exp(log_weight) with breakpoints r1 < r2 and its tightest sampled constants.
class WeightSpec {
public:
    WeightSpec(WeightKind kind, double gamma);

    WeightKind kind() const { return kind_; }
    double gamma() const { return gamma_; }
    double r1() const { return r1_; }
    double r2() const { return r2_; }
    const WeightConstants& constants() const { return c_; }

    double log_weight(double r) const;
    double dlog_weight(double r) const;
    /// Extra factor on |grad f|^2 in the far J block: r^2 for GroundState, (1 + r^2) for Power.
    double far_gradient_factor(double r) const;

    /// Largest residual of the plateau, inner and far conditions on a fine sample
    /// (<= 0 means all hold with the stored constants).
    double max_condition_residual(double r_sample_max = 200.0) const;

    std::string describe() const;

private:
    WeightKind kind_;
    double gamma_;
    double r1_, r2_;
    AnnulusPotential annulus_;
    WeightConstants c_;
};

/// r1 = 1/sqrt2, r2 = 3/4, log w = annulus H.
WeightSpec ground_state_weight(double gamma);
/// v = (1 + r^2)^{-gamma/2}, r1 = 2/sqrt(gamma), r2 = 1.
WeightSpec power_weight(double gamma);

/// Tightest constants from samples of log w on [0, r_sample_max].
WeightConstants fit_weight_constants(const WeightSpec& w, double r_sample_max = 200.0,
                                     std::size_t n_samples = 200000);

enum class Concentration { MoreConcentrated, Incomparable };

struct ConcentrationWitness {
    Concentration ordering = Concentration::Incomparable;
    std::optional<double> first_violation;  // edge radius where the prefix order fails
    double max_violation = 0.0;
};

/// Is g1 more concentrated than g2 (int_0^r g1 s ds >= int_0^r g2 s ds for all edges)?
ConcentrationWitness concentration_compare(const RadialProfile& g1, const RadialProfile& g2,
                                           double rel_tol = 1e-12);

}  // namespace chemoscale
