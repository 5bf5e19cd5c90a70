#include "frontlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "frontlab/errors.hpp"

namespace frontlab {

MeanStats summarize(std::span<const double> values) {
    MeanStats out;
    out.count = values.size();
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            const double d = v - out.mean;
            ss += d * d;
        }
        out.variance = ss / static_cast<double>(values.size() - 1);
        out.se = std::sqrt(out.variance / static_cast<double>(values.size()));
    }
    return out;
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0) throw DomainError("normal_quantile: p must lie in (0,1)");
    // Newton refinement from a rational starting point (Beasley-Springer-Moro).
    const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                        1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                        6.680131188771972e+01, -1.328068155288572e+01};
    const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                        -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                        3.754408661907416e+00};
    double x;
    if (p < 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 0.97575) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int i = 0; i < 2; ++i) {
        const double err = normal_cdf(x) - p;
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0));
        if (pdf > 0.0) x -= err / pdf;
    }
    return x;
}

BinomialCi wilson_interval(std::size_t successes, std::size_t trials, double confidence) {
    if (trials == 0) throw DomainError("wilson_interval: zero trials");
    const double z = normal_quantile(0.5 + confidence / 2.0);
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    return {phat, std::max(0.0, center - half), std::min(1.0, center + half)};
}

TrendTest kendall_trend(std::span<const double> series) {
    TrendTest out;
    const std::size_t n = series.size();
    if (n < 3) return out;
    long long concordant = 0;
    long long discordant = 0;
    long long tied = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = series[j] - series[i];
            if (d > 0)
                ++concordant;
            else if (d < 0)
                ++discordant;
            else
                ++tied;
        }
    }
    const long long total = concordant + discordant + tied;
    const long long informative = concordant + discordant;
    if (informative == 0) return out;  // constant series: no trend
    // tau-b: time ranks carry no ties, value ties shrink the denominator.
    const double denom = std::sqrt(static_cast<double>(total)) * std::sqrt(static_cast<double>(informative));
    out.tau = static_cast<double>(concordant - discordant) / denom;
    const double nn = static_cast<double>(n);
    const double var_s = nn * (nn - 1.0) * (2.0 * nn + 5.0) / 18.0;
    const double s = static_cast<double>(concordant - discordant);
    // continuity-corrected normal approximation
    const double corr = (s > 0) ? -1.0 : (s < 0 ? 1.0 : 0.0);
    out.z = (s + corr) / std::sqrt(var_s);
    out.p_increasing = 1.0 - normal_cdf(out.z);
    out.p_two_sided = 2.0 * (1.0 - normal_cdf(std::abs(out.z)));
    out.p_two_sided = std::min(1.0, out.p_two_sided);
    return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw DomainError("fit_line: need two equal-length series of length >= 2");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) throw DomainError("fit_line: degenerate abscissae");
    LineFit fit;
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy - fit.slope * sx) / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = std::abs(y[i] - (fit.intercept + fit.slope * x[i]));
        fit.max_residual = std::max(fit.max_residual, r);
    }
    return fit;
}

double effective_sample_size(std::span<const double> weights) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double w : weights) {
        sum += w;
        sum_sq += w * w;
    }
    if (sum_sq == 0.0) return 0.0;
    return sum * sum / sum_sq;
}

}
