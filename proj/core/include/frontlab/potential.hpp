#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "frontlab/interval.hpp"

namespace frontlab {

// Non-increasing bump shape: 1 on [0,1], 0 from 2 on, piecewise linear in
// between. Controls how a single point of the medium spreads its influence.
class BumpProfile {
public:
    struct Breakpoint {
        double x;
        double value;
    };

    // Defaults to the ramp that is 1 up to distance 1 and falls to 0 at 1.5.
    BumpProfile();
    explicit BumpProfile(std::vector<Breakpoint> breakpoints);

    double value(double distance) const;
    double max_slope() const;
    // Distance beyond which the profile is identically zero.
    double support_radius() const;
    const std::vector<Breakpoint>& breakpoints() const { return points_; }

private:
    void validate() const;
    std::vector<Breakpoint> points_;
};

class Potential {
public:
    virtual ~Potential() = default;
    virtual double value(double x) const = 0;
    virtual double ei() const = 0;
    virtual double es() const = 0;
    virtual Interval window() const = 0;
};

class ConstantPotential final : public Potential {
public:
    explicit ConstantPotential(double level, Interval window = {-1e12, 1e12});
    double value(double x) const override;
    double ei() const override { return level_; }
    double es() const override { return level_; }
    Interval window() const override { return window_; }

private:
    double level_;
    Interval window_;
};

// xi(x) = ei + (es - ei) * sup_i chi(|x - point_i|). Points are kept sorted;
// they cover the window extended by 2 on each side so edge values are not
// starved of bumps.
class PoissonBumpPotential final : public Potential {
public:
    PoissonBumpPotential(double ei, double es, double intensity, Interval window,
                         std::vector<double> points, BumpProfile profile = BumpProfile());

    double value(double x) const override;
    double ei() const override { return ei_; }
    double es() const override { return es_; }
    Interval window() const override { return window_; }

    double intensity() const { return intensity_; }
    const std::vector<double>& points() const { return points_; }
    const BumpProfile& profile() const { return profile_; }
    double lipschitz_bound() const { return (es_ - ei_) * profile_.max_slope(); }

private:
    double ei_;
    double es_;
    double intensity_;
    Interval window_;
    std::vector<double> points_;
    BumpProfile profile_;
};

// Homogeneous Poisson points on the window extended by 2 on each side.
std::vector<double> sample_poisson_points(double intensity, Interval window, std::uint64_t seed);

PoissonBumpPotential make_poisson_potential(double ei, double es, double intensity, Interval window,
                                            std::uint64_t seed, BumpProfile profile = BumpProfile());

// Uniform-grid sample of a potential; evaluation interpolates linearly.
class LatticePotential final : public Potential {
public:
    LatticePotential(double origin, double dx, std::vector<double> values, double ei, double es);

    double value(double x) const override;
    double ei() const override { return ei_; }
    double es() const override { return es_; }
    Interval window() const override;

    double origin() const { return origin_; }
    double dx() const { return dx_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }

private:
    double origin_;
    double dx_;
    std::vector<double> values_;
    double ei_;
    double es_;
};

LatticePotential discretize(const Potential& pot, double dx, Interval window);

class ScaledPotential final : public Potential {
public:
    ScaledPotential(std::shared_ptr<const Potential> base, double factor);
    double value(double x) const override { return factor_ * base_->value(x); }
    double ei() const override { return factor_ * base_->ei(); }
    double es() const override { return factor_ * base_->es(); }
    Interval window() const override { return base_->window(); }
    double factor() const { return factor_; }

private:
    std::shared_ptr<const Potential> base_;
    double factor_;
};

// A flat-low / ramp / flat-high configuration: xi = ei on
// [center - 2*half_length, center], xi = es on [center + 2, center + 2*half_length - 2],
// non-decreasing across the joint span, ei elsewhere up to bump tails.
PoissonBumpPotential engineer_stretch_potential(double ei, double es, double half_length,
                                                double center, Interval window);

struct StretchReport {
    double n = 0.0;
    double x_n = 0.0;        // anchor: left end of the high side's approach
    double c0 = 0.0;
    Interval low_interval;   // where xi == ei
    Interval high_interval;  // where xi == es (may be empty for small c0*ln n)
    bool monotone_ok = false;
};

// Scans [n, 2n] for each integer n in [n_lo, n_hi] and reports the leftmost
// anchor whose low/high/monotone pattern holds on a verification grid.
std::vector<StretchReport> find_stretches(const Potential& pot, double c0, int n_lo, int n_hi,
                                          double grid_dx = 0.05, double tol = 1e-12);

}
