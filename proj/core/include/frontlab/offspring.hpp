#pragma once

#include <vector>

#include "frontlab/rng.hpp"

namespace frontlab {

// Finite offspring law with mean two. Construction rejects anything that is
// not a probability vector on k >= 1 with unit mass and mean 2; nothing is
// renormalized silently.
class OffspringDistribution {
public:
    struct Entry {
        int count;
        double probability;
    };

    // Defaults to binary splitting (two children with probability one).
    OffspringDistribution();
    explicit OffspringDistribution(std::vector<Entry> entries);

    const std::vector<Entry>& entries() const { return entries_; }
    double mean() const { return mean_; }
    double second_moment() const { return second_moment_; }
    int max_count() const { return max_count_; }
    bool is_binary() const { return entries_.size() == 1 && entries_.front().count == 2; }

private:
    std::vector<Entry> entries_;
    std::vector<double> cumulative_;
    double mean_ = 0.0;
    double second_moment_ = 0.0;
    int max_count_ = 0;

    friend int sample_offspring(const OffspringDistribution& dist, Rng& rng);
};

int sample_offspring(const OffspringDistribution& dist, Rng& rng);

// Reaction term F(u) = (1-u) - sum_k p_k (1-u)^k induced by an offspring law,
// together with the per-unit growth ratio c(w) = F(w)/w extended continuously
// by c(0) = 1.
class Nonlinearity {
public:
    explicit Nonlinearity(OffspringDistribution dist = OffspringDistribution());

    double value(double u) const;
    double growth_ratio(double w) const;
    const OffspringDistribution& offspring() const { return dist_; }

private:
    OffspringDistribution dist_;
    double curvature_;  // -F''(0) = m2 - 2
};

}
