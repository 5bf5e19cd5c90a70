#include "frontlab/offspring.hpp"

#include <algorithm>
#include <cmath>

#include "frontlab/errors.hpp"

namespace frontlab {

OffspringDistribution::OffspringDistribution()
    : OffspringDistribution(std::vector<Entry>{{2, 1.0}}) {}

OffspringDistribution::OffspringDistribution(std::vector<Entry> entries)
    : entries_(std::move(entries)) {
    if (entries_.empty()) throw ConfigError("offspring law needs at least one entry");
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.count < b.count; });
    double mass = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.count < 1) throw ConfigError("offspring counts must be >= 1");
        if (i > 0 && e.count == entries_[i - 1].count)
            throw ConfigError("offspring counts must be distinct");
        if (e.probability < 0.0 || e.probability > 1.0)
            throw ConfigError("offspring probabilities must lie in [0,1]");
        mass += e.probability;
        mean_ += e.probability * e.count;
        second_moment_ += e.probability * e.count * e.count;
        max_count_ = std::max(max_count_, e.count);
    }
    if (std::abs(mass - 1.0) > 1e-12)
        throw ConfigError("offspring probabilities must sum to 1 (off by " +
                          std::to_string(mass - 1.0) + ")");
    if (std::abs(mean_ - 2.0) > 1e-10)
        throw ConfigError("offspring mean must equal 2 (got " + std::to_string(mean_) + ")");
    cumulative_.reserve(entries_.size());
    double cum = 0.0;
    for (const auto& e : entries_) {
        cum += e.probability;
        cumulative_.push_back(cum);
    }
    cumulative_.back() = 1.0;
}

int sample_offspring(const OffspringDistribution& dist, Rng& rng) {
    const double u = rng.uniform();
    const auto& cum = dist.cumulative_;
    auto it = std::lower_bound(cum.begin(), cum.end(), u);
    const auto idx = static_cast<std::size_t>(it - cum.begin());
    return dist.entries_[std::min(idx, dist.entries_.size() - 1)].count;
}

Nonlinearity::Nonlinearity(OffspringDistribution dist)
    : dist_(std::move(dist)), curvature_(dist_.second_moment() - 2.0) {}

double Nonlinearity::value(double u) const {
    if (u < 0.0 || u > 1.0)
        throw DomainError("reaction term evaluated outside [0,1]: " + std::to_string(u));
    const double s = 1.0 - u;
    double gen = 0.0;  // sum_k p_k s^k
    for (const auto& e : dist_.entries()) {
        double p = 1.0;
        for (int i = 0; i < e.count; ++i) p *= s;
        gen += e.probability * p;
    }
    return s - gen;
}

double Nonlinearity::growth_ratio(double w) const {
    if (w < 0.0 || w > 1.0)
        throw DomainError("growth ratio evaluated outside [0,1]: " + std::to_string(w));
    // Direct division cancels catastrophically near zero; second-order
    // expansion F(w) = w - (m2-2) w^2/2 + O(w^3) takes over there.
    if (w < 1e-6) return 1.0 - 0.5 * curvature_ * w;
    return value(w) / w;
}

}
