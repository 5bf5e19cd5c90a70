#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace frontlab {

struct MeanStats {
    double mean = 0.0;
    double variance = 0.0;   // sample variance (n-1 denominator)
    double se = 0.0;         // standard error of the mean
    std::size_t count = 0;
};

MeanStats summarize(std::span<const double> values);

double normal_cdf(double x);
double normal_quantile(double p);

// Wilson score interval for a binomial proportion.
struct BinomialCi {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};
BinomialCi wilson_interval(std::size_t successes, std::size_t trials, double confidence = 0.95);

// Kendall rank correlation against time order, with the p-value for the
// one-sided alternative "series increases". Ties handled via tau-b; a series
// with no rank variation reports tau = 0, p = 1.
struct TrendTest {
    double tau = 0.0;
    double z = 0.0;
    double p_increasing = 1.0;
    double p_two_sided = 1.0;
};
TrendTest kendall_trend(std::span<const double> series);

// Least squares fit y = intercept + slope * x.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double max_residual = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

double effective_sample_size(std::span<const double> weights);

}
