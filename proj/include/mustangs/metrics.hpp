#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mustangs/matrix.hpp"

namespace mustangs {

// 2D Gaussian moment fit: sample mean and covariance (ddof = 1).
struct GaussianFit {
    std::array<double, 2> mean{0.0, 0.0};
    // Row-major 2x2, symmetric by construction.
    std::array<double, 4> cov{0.0, 0.0, 0.0, 0.0};
    std::size_t n{0};

    static GaussianFit from_samples(const Matrix& samples);
};

// Squared Frechet distance between two Gaussian fits:
//   ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2})
// with the 2x2 matrix square-root trace in closed form:
//   Tr((S1 S2)^{1/2}) = sqrt(Tr(S1 S2) + 2 sqrt(det S1 det S2)).
// Negative round-off is clamped to zero; a clearly non-PSD product is a
// NumericError.
double frechet_distance(const GaussianFit& a, const GaussianFit& b);

// Per-mode sample counts plus one bucket for samples too far from every
// mode center.
struct ModeHistogram {
    std::vector<std::size_t> counts;
    std::size_t unassigned{0};

    std::size_t total() const;
    // Probabilities over counts + unassigned (last entry); sums to 1.
    std::vector<double> probabilities() const;
};

// Total variation distance between two histograms over the same mode
// universe: half the L1 distance of the normalized probabilities.
double tvd(const ModeHistogram& p, const ModeHistogram& q);

// Assigns each 2D sample to the nearest center iff its distance is within
// 3*sigma; ties in distance go to the lower center index.
ModeHistogram assign_modes(const Matrix& samples,
                           std::span<const std::array<double, 2>> centers,
                           double sigma);

// Number of modes holding at least coverage_threshold of the samples.
int modes_covered(const ModeHistogram& hist, double coverage_threshold);

// Fraction of samples assigned to some mode.
double high_quality_fraction(const ModeHistogram& hist);

struct MetricsReport {
    double frechet_distance{0.0};
    double tvd{0.0};
    int modes_covered{0};
    double high_quality_fraction{0.0};
};

}  // namespace mustangs
