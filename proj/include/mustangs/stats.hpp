#pragma once

#include <span>
#include <vector>

namespace mustangs {

struct RankSumResult {
    double u{0.0};       // U statistic of the first sample
    double p{1.0};       // two-sided p-value
    bool tie_warning{false};
};

// Two-sided Mann-Whitney U with midranks, tie-corrected variance, normal
// approximation and continuity correction. Degenerate all-tied input gives
// p = 1 with tie_warning set. Each sample needs >= 5 values.
RankSumResult ranksum_test(std::span<const double> a, std::span<const double> b);

// Holm step-down adjustment; returns adjusted p-values in input order.
std::vector<double> holm_adjust(std::span<const double> p_values);

struct SummaryStats {
    double mean{0.0};
    double std_pct{0.0};   // 100 * sample std / mean
    double median{0.0};
    double iqr{0.0};
};

// Quantile with linear interpolation between order statistics (the R-7 /
// numpy default convention): position h = (n-1)q.
double quantile_linear(std::vector<double> sorted_ascending, double q);

// Mean, std% (ddof=1), median and IQR; needs >= 2 values.
SummaryStats summarize_values(std::span<const double> values);

}  // namespace mustangs
