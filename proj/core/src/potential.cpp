#include "frontlab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "frontlab/errors.hpp"
#include "frontlab/rng.hpp"

namespace frontlab {

namespace {

std::string format_interval(const Interval& iv) {
    std::ostringstream os;
    os << "[" << iv.lo << ", " << iv.hi << "]";
    return os.str();
}

}

// ---------------------------------------------------------------- BumpProfile

BumpProfile::BumpProfile() : points_{{0.0, 1.0}, {1.0, 1.0}, {1.5, 0.0}, {2.0, 0.0}} {}

BumpProfile::BumpProfile(std::vector<Breakpoint> breakpoints) : points_(std::move(breakpoints)) {
    validate();
}

void BumpProfile::validate() const {
    if (points_.size() < 2) throw ConfigError("bump profile needs at least two breakpoints");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        if (p.x < 0.0) throw ConfigError("bump profile abscissae must be non-negative");
        if (p.value < 0.0 || p.value > 1.0) throw ConfigError("bump profile values must lie in [0,1]");
        if (i > 0) {
            if (p.x <= points_[i - 1].x) throw ConfigError("bump profile abscissae must increase");
            if (p.value > points_[i - 1].value + 1e-15)
                throw ConfigError("bump profile must be non-increasing");
        }
    }
    if (value(0.0) != 1.0 || value(1.0) != 1.0)
        throw ConfigError("bump profile must equal 1 on [0,1]");
    if (value(2.0) != 0.0 || points_.back().value != 0.0)
        throw ConfigError("bump profile must vanish from distance 2 on");
}

double BumpProfile::value(double distance) const {
    const double d = std::abs(distance);
    if (d <= points_.front().x) return points_.front().value;
    if (d >= points_.back().x) return points_.back().value;
    auto it = std::upper_bound(points_.begin(), points_.end(), d,
                               [](double lhs, const Breakpoint& rhs) { return lhs < rhs.x; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double t = (d - lo.x) / (hi.x - lo.x);
    return lo.value + t * (hi.value - lo.value);
}

double BumpProfile::max_slope() const {
    double best = 0.0;
    for (std::size_t i = 1; i < points_.size(); ++i) {
        const double slope =
            std::abs(points_[i].value - points_[i - 1].value) / (points_[i].x - points_[i - 1].x);
        best = std::max(best, slope);
    }
    return best;
}

double BumpProfile::support_radius() const {
    // First abscissa from which the profile stays at zero.
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (points_[i].value == 0.0) return points_[i].x;
    }
    return points_.back().x;
}

// ---------------------------------------------------------- ConstantPotential

ConstantPotential::ConstantPotential(double level, Interval window) : level_(level), window_(window) {
    if (level <= 0.0) throw ConfigError("constant potential level must be positive");
    if (!window.valid()) throw ConfigError("constant potential window must be non-degenerate");
}

double ConstantPotential::value(double x) const {
    if (!window_.contains(x))
        throw DomainError("potential evaluated at " + std::to_string(x) + " outside window " +
                          format_interval(window_));
    return level_;
}

// ------------------------------------------------------- PoissonBumpPotential

PoissonBumpPotential::PoissonBumpPotential(double ei, double es, double intensity, Interval window,
                                           std::vector<double> points, BumpProfile profile)
    : ei_(ei), es_(es), intensity_(intensity), window_(window), points_(std::move(points)),
      profile_(std::move(profile)) {
    if (!(ei > 0.0)) throw ConfigError("potential floor ei must be positive");
    if (!(es > ei)) throw ConfigError("potential peak es must exceed ei");
    if (intensity < 0.0) throw ConfigError("point intensity must be non-negative");
    if (!window.valid()) throw ConfigError("potential window must be non-degenerate");
    if (!std::is_sorted(points_.begin(), points_.end())) std::sort(points_.begin(), points_.end());
}

double PoissonBumpPotential::value(double x) const {
    if (!window_.contains(x))
        throw DomainError("potential evaluated at " + std::to_string(x) + " outside window " +
                          format_interval(window_));
    const double radius = profile_.support_radius();
    double best = 0.0;
    auto it = std::lower_bound(points_.begin(), points_.end(), x - radius);
    for (; it != points_.end() && *it <= x + radius; ++it) {
        best = std::max(best, profile_.value(x - *it));
        if (best >= 1.0) break;
    }
    return ei_ + (es_ - ei_) * best;
}

std::vector<double> sample_poisson_points(double intensity, Interval window, std::uint64_t seed) {
    if (intensity < 0.0) throw ConfigError("point intensity must be non-negative");
    if (!window.valid()) throw ConfigError("sampling window must be non-degenerate");
    std::vector<double> points;
    if (intensity == 0.0) return points;
    const double lo = window.lo - 2.0;
    const double hi = window.hi + 2.0;
    Rng rng(seed, 0);
    double x = lo;
    for (;;) {
        x += rng.exponential(intensity);
        if (x > hi) break;
        points.push_back(x);
    }
    return points;
}

PoissonBumpPotential make_poisson_potential(double ei, double es, double intensity, Interval window,
                                            std::uint64_t seed, BumpProfile profile) {
    return PoissonBumpPotential(ei, es, intensity, window,
                                sample_poisson_points(intensity, window, seed), std::move(profile));
}

// ------------------------------------------------------------ LatticePotential

LatticePotential::LatticePotential(double origin, double dx, std::vector<double> values, double ei,
                                   double es)
    : origin_(origin), dx_(dx), values_(std::move(values)), ei_(ei), es_(es) {
    if (dx <= 0.0) throw ConfigError("lattice spacing must be positive");
    if (values_.size() < 2) throw ConfigError("lattice potential needs at least two samples");
}

Interval LatticePotential::window() const {
    return {origin_, origin_ + dx_ * static_cast<double>(values_.size() - 1)};
}

double LatticePotential::value(double x) const {
    const double pos = (x - origin_) / dx_;
    if (pos < -1e-9 || pos > static_cast<double>(values_.size() - 1) + 1e-9)
        throw DomainError("lattice potential evaluated at " + std::to_string(x) + " outside window " +
                          format_interval(window()));
    const double clamped = std::clamp(pos, 0.0, static_cast<double>(values_.size() - 1));
    const auto k = static_cast<std::size_t>(clamped);
    if (k + 1 >= values_.size()) return values_.back();
    const double t = clamped - static_cast<double>(k);
    return values_[k] + t * (values_[k + 1] - values_[k]);
}

LatticePotential discretize(const Potential& pot, double dx, Interval window) {
    if (dx <= 0.0) throw ConfigError("lattice spacing must be positive");
    if (!pot.window().contains(window))
        throw DomainError("discretization window " + format_interval(window) +
                          " exceeds potential window " + format_interval(pot.window()));
    const auto count = static_cast<std::size_t>(std::floor(window.length() / dx)) + 1;
    std::vector<double> values(count);
    for (std::size_t k = 0; k < count; ++k) values[k] = pot.value(window.lo + dx * static_cast<double>(k));
    return LatticePotential(window.lo, dx, std::move(values), pot.ei(), pot.es());
}

// ------------------------------------------------------------- ScaledPotential

ScaledPotential::ScaledPotential(std::shared_ptr<const Potential> base, double factor)
    : base_(std::move(base)), factor_(factor) {
    if (!base_) throw ConfigError("scaled potential needs a base potential");
    if (!(factor > 0.0)) throw ConfigError("potential scale factor must be positive");
}

// ------------------------------------------------- engineer_stretch_potential

PoissonBumpPotential engineer_stretch_potential(double ei, double es, double half_length,
                                                double center, Interval window) {
    if (!(half_length > 2.0))
        throw PreconditionError("stretch half-length must exceed 2 (got " +
                                std::to_string(half_length) + ")");
    const Interval needed{center - 2.0 * half_length - 2.0, center + 2.0 * half_length + 2.0};
    if (!window.contains(needed))
        throw PreconditionError("window " + format_interval(window) + " must contain " +
                                format_interval(needed));
    // Unit-spaced points saturate [center+2, center+2*half_length-2]; the
    // closest point sits 3 to the right of center, so [center-2h, center]
    // stays at the floor and the rise in between is monotone.
    const int last_offset = std::max(3, static_cast<int>(std::ceil(2.0 * half_length - 3.0)));
    std::vector<double> points;
    points.reserve(static_cast<std::size_t>(last_offset - 2));
    for (int k = 3; k <= last_offset; ++k) points.push_back(center + static_cast<double>(k));
    return PoissonBumpPotential(ei, es, 0.0, window, std::move(points));
}

// ---------------------------------------------------------------- find_stretches

std::vector<StretchReport> find_stretches(const Potential& pot, double c0, int n_lo, int n_hi,
                                          double grid_dx, double tol) {
    if (!(c0 > 0.0)) throw ConfigError("stretch scale c0 must be positive");
    if (n_lo < 2 || n_hi < n_lo) throw ConfigError("stretch scan needs 2 <= n_lo <= n_hi");
    if (grid_dx <= 0.0 || grid_dx > 0.05)
        throw ConfigError("stretch verification grid spacing must lie in (0, 0.05]");

    const double phi_max = c0 * std::log(static_cast<double>(n_hi));
    const Interval scan{static_cast<double>(n_lo) - 2.0 * phi_max - grid_dx,
                        2.0 * static_cast<double>(n_hi) + 2.0 * phi_max + grid_dx};
    if (!pot.window().contains(scan))
        throw DomainError("potential window " + format_interval(pot.window()) +
                          " too small for stretch scan; need " + format_interval(scan));

    const auto cells = static_cast<std::size_t>(std::floor(scan.length() / grid_dx)) + 1;
    std::vector<double> values(cells);
    for (std::size_t k = 0; k < cells; ++k)
        values[k] = pot.value(scan.lo + grid_dx * static_cast<double>(k));

    const double ei = pot.ei();
    const double es = pot.es();
    std::vector<std::size_t> ei_run(cells, 0);   // consecutive ei-cells ending at k
    std::vector<std::size_t> es_run(cells, 0);   // consecutive es-cells starting at k
    std::vector<std::size_t> nondec(cells, 1);   // non-decreasing run ending at k
    for (std::size_t k = 0; k < cells; ++k) {
        const bool is_ei = std::abs(values[k] - ei) <= tol;
        ei_run[k] = is_ei ? (k > 0 ? ei_run[k - 1] + 1 : 1) : 0;
        if (k > 0 && values[k] >= values[k - 1] - tol) nondec[k] = nondec[k - 1] + 1;
    }
    for (std::size_t k = cells; k-- > 0;) {
        const bool is_es = std::abs(values[k] - es) <= tol;
        es_run[k] = is_es ? (k + 1 < cells ? es_run[k + 1] + 1 : 1) : 0;
    }

    auto index_at_or_above = [&](double x) {
        return static_cast<long long>(std::ceil((x - scan.lo) / grid_dx - 1e-9));
    };
    auto index_at_or_below = [&](double x) {
        return static_cast<long long>(std::floor((x - scan.lo) / grid_dx + 1e-9));
    };

    std::vector<StretchReport> reports;
    for (int n = n_lo; n <= n_hi; ++n) {
        const double phi = c0 * std::log(static_cast<double>(n));
        const long long first = index_at_or_above(static_cast<double>(n));
        const long long last = index_at_or_below(2.0 * static_cast<double>(n));
        for (long long k = first; k <= last; ++k) {
            const double x = scan.lo + grid_dx * static_cast<double>(k);
            const long long low_lo = index_at_or_above(x - 2.0 * phi);
            const long long high_lo = index_at_or_above(x + 2.0);
            const long long high_hi = index_at_or_below(x + 2.0 * phi - 2.0);
            const long long mono_hi = std::max(index_at_or_below(x + 2.0 * phi - 2.0), k);
            if (low_lo < 0 || mono_hi >= static_cast<long long>(cells)) continue;

            if (ei_run[static_cast<std::size_t>(k)] < static_cast<std::size_t>(k - low_lo + 1)) continue;
            if (high_hi >= high_lo) {
                if (high_hi >= static_cast<long long>(cells)) continue;
                if (es_run[static_cast<std::size_t>(high_lo)] <
                    static_cast<std::size_t>(high_hi - high_lo + 1))
                    continue;
            }
            if (nondec[static_cast<std::size_t>(mono_hi)] < static_cast<std::size_t>(mono_hi - low_lo + 1))
                continue;

            StretchReport report;
            report.n = static_cast<double>(n);
            report.x_n = x;
            report.c0 = c0;
            report.low_interval = {x - 2.0 * phi, x};
            report.high_interval = {x + 2.0, x + 2.0 * phi - 2.0};
            report.monotone_ok = true;
            reports.push_back(report);
            break;
        }
    }
    return reports;
}

}
