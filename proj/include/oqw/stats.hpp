#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "oqw/types.hpp"

namespace oqw {

struct MomentSummary {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

inline MomentSummary moment_summary(const std::vector<double>& xs) {
    MomentSummary m;
    const double n = double(xs.size());
    if (xs.size() < 2) return m;
    for (double x : xs) m.mean += x;
    m.mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double c = x - m.mean;
        m2 += c * c;
        m3 += c * c * c;
        m4 += c * c * c * c;
    }
    m.variance = m2 / (n - 1.0);
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

inline double normal_cdf(double x, double mean, double stddev) {
    return 0.5 * std::erfc(-(x - mean) / (stddev * std::sqrt(2.0)));
}

// Kolmogorov-Smirnov distance against a Gaussian fitted to the sample
// (composite test; the caller's threshold must absorb the fitting bias).
// Walk endpoints live on a lattice, whose largest atom alone would dominate
// the distance; when the sample sits on an integer lattice the comparison is
// therefore made at the cell boundaries (half-spacing continuity correction).
inline double ks_distance_fitted_normal(std::vector<double> xs) {
    const MomentSummary m = moment_summary(xs);
    const double sd = std::sqrt(m.variance);
    if (sd <= 0.0) return 1.0;
    std::sort(xs.begin(), xs.end());
    const double n = double(xs.size());

    long long spacing = 0;
    bool lattice = true;
    for (double x : xs) {
        if (std::abs(x - std::round(x)) > 1e-9) {
            lattice = false;
            break;
        }
        const long long step = std::llround(x - xs.front());
        spacing = std::gcd(spacing, step);
    }
    const double shift = lattice && spacing > 0 ? double(spacing) / 2.0 : 0.0;

    double d = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i + 1 < xs.size() && xs[i + 1] == xs[i]) continue;  // last of a tie run
        d = std::max(d, std::abs(normal_cdf(xs[i] + shift, m.mean, sd) - double(i + 1) / n));
    }
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i > 0 && xs[i - 1] == xs[i]) continue;  // first of a tie run
        d = std::max(d, std::abs(normal_cdf(xs[i] - shift, m.mean, sd) - double(i) / n));
    }
    return d;
}

}  // namespace oqw
