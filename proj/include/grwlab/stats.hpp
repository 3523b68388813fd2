#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "grwlab/errors.hpp"

namespace grwlab::stats {

/// Standard error of a frequency estimate of p from n draws.
inline double binomial_sigma(double p, std::size_t n) {
    if (n == 0) throw PreconditionError("binomial_sigma: no samples");
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

/// Standard error of the difference of two independent frequencies.
inline double difference_sigma(double p, std::size_t n1, std::size_t n2) {
    if (n1 == 0 || n2 == 0) throw PreconditionError("difference_sigma: no samples");
    return std::sqrt(p * (1.0 - p) * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
}

struct KsResult {
    double statistic = 0.0;
    double critical = 0.0;
    bool passed() const { return statistic <= critical; }
};

/// Asymptotic critical value c(a) sqrt((n + m) / (n m)), c(a) = sqrt(-ln(a/2) / 2).
inline double ks_critical(double level, std::size_t n, std::size_t m) {
    const double c = std::sqrt(-0.5 * std::log(level / 2.0));
    const double nn = static_cast<double>(n), mm = static_cast<double>(m);
    return c * std::sqrt((nn + mm) / (nn * mm));
}

/// Two-sample Kolmogorov-Smirnov test at the given level.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double level = 0.01) {
    if (a.empty() || b.empty()) throw PreconditionError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return {d, ks_critical(level, a.size(), b.size())};
}

}  // namespace grwlab::stats
