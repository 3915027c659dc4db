#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mustangs/errors.hpp"
#include "mustangs/stats.hpp"

namespace mustangs {

namespace {

double normal_sf(double z) {
    // P(Z > z) for standard normal.
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace

RankSumResult ranksum_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 5 || b.size() < 5) {
        throw UsageError("ranksum_test: each sample needs >= 5 values");
    }
    const std::size_t n1 = a.size();
    const std::size_t n2 = b.size();
    const std::size_t n = n1 + n2;

    struct Tagged {
        double value;
        bool from_a;
    };
    std::vector<Tagged> pooled;
    pooled.reserve(n);
    for (double v : a) pooled.push_back({v, true});
    for (double v : b) pooled.push_back({v, false});
    std::sort(pooled.begin(), pooled.end(),
              [](const Tagged& x, const Tagged& y) { return x.value < y.value; });

    // Midranks; collect tie-group sizes for the variance correction.
    double rank_sum_a = 0.0;
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && pooled[j].value == pooled[i].value) ++j;
        const std::size_t t = j - i;
        const double midrank = (static_cast<double>(i + 1) +
                                static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (pooled[k].from_a) rank_sum_a += midrank;
        }
        if (t > 1) {
            tie_term += static_cast<double>(t) * static_cast<double>(t) *
                            static_cast<double>(t) -
                        static_cast<double>(t);
        }
        i = j;
    }

    RankSumResult result;
    const double fn1 = static_cast<double>(n1);
    const double fn2 = static_cast<double>(n2);
    const double fn = static_cast<double>(n);
    result.u = rank_sum_a - fn1 * (fn1 + 1.0) / 2.0;

    const double mu = fn1 * fn2 / 2.0;
    const double variance =
        (fn1 * fn2 / 12.0) * ((fn + 1.0) - tie_term / (fn * (fn - 1.0)));
    if (variance <= 0.0) {
        result.p = 1.0;
        result.tie_warning = true;
        return result;
    }
    if (tie_term > 0.0) result.tie_warning = true;

    double z = result.u - mu;
    // Continuity correction toward the mean.
    if (z > 0.5) {
        z -= 0.5;
    } else if (z < -0.5) {
        z += 0.5;
    } else {
        z = 0.0;
    }
    z /= std::sqrt(variance);
    result.p = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
    return result;
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return p_values[x] < p_values[y];
    });
    std::vector<double> adjusted(m, 0.0);
    double running_max = 0.0;
    for (std::size_t rank = 0; rank < m; ++rank) {
        const double scaled =
            static_cast<double>(m - rank) * p_values[order[rank]];
        running_max = std::max(running_max, std::min(1.0, scaled));
        adjusted[order[rank]] = running_max;
    }
    return adjusted;
}

double quantile_linear(std::vector<double> sorted_ascending, double q) {
    if (sorted_ascending.empty()) {
        throw UsageError("quantile of empty sample");
    }
    const std::size_t n = sorted_ascending.size();
    if (n == 1) return sorted_ascending[0];
    const double h = static_cast<double>(n - 1) * q;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted_ascending[lo] +
           frac * (sorted_ascending[hi] - sorted_ascending[lo]);
}

SummaryStats summarize_values(std::span<const double> values) {
    if (values.size() < 2) {
        throw UsageError("summary statistics need >= 2 values");
    }
    SummaryStats s;
    const double n = static_cast<double>(values.size());
    for (double v : values) s.mean += v;
    s.mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double stddev = std::sqrt(ss / (n - 1.0));
    s.std_pct = s.mean == 0.0 ? (stddev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity())
                              : 100.0 * stddev / s.mean;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    s.median = quantile_linear(sorted, 0.5);
    s.iqr = quantile_linear(sorted, 0.75) - quantile_linear(sorted, 0.25);
    return s;
}

}  // namespace mustangs
