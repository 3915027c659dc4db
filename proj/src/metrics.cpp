#include <algorithm>
#include <cmath>
#include <limits>

#include "mustangs/errors.hpp"
#include "mustangs/metrics.hpp"

namespace mustangs {

GaussianFit GaussianFit::from_samples(const Matrix& samples) {
    if (samples.rows() < 2) {
        throw UsageError("GaussianFit needs >= 2 samples");
    }
    if (samples.cols() != 2) {
        throw StructuralError("GaussianFit expects 2D samples");
    }
    GaussianFit fit;
    fit.n = samples.rows();
    const double n = static_cast<double>(fit.n);
    for (std::size_t i = 0; i < fit.n; ++i) {
        fit.mean[0] += samples(i, 0);
        fit.mean[1] += samples(i, 1);
    }
    fit.mean[0] /= n;
    fit.mean[1] /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < fit.n; ++i) {
        const double dx = samples(i, 0) - fit.mean[0];
        const double dy = samples(i, 1) - fit.mean[1];
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    fit.cov = {sxx / (n - 1.0), sxy / (n - 1.0), sxy / (n - 1.0),
               syy / (n - 1.0)};
    return fit;
}

double frechet_distance(const GaussianFit& a, const GaussianFit& b) {
    if (a.n < 2 || b.n < 2) {
        throw UsageError("frechet_distance needs fits from >= 2 samples");
    }
    const double dx = a.mean[0] - b.mean[0];
    const double dy = a.mean[1] - b.mean[1];
    const double mean_term = dx * dx + dy * dy;

    const double tr_a = a.cov[0] + a.cov[3];
    const double tr_b = b.cov[0] + b.cov[3];
    // Tr(S1 S2) for symmetric 2x2 matrices.
    const double tr_prod = a.cov[0] * b.cov[0] + 2.0 * a.cov[1] * b.cov[1] +
                           a.cov[3] * b.cov[3];
    const double det_a = a.cov[0] * a.cov[3] - a.cov[1] * a.cov[2];
    const double det_b = b.cov[0] * b.cov[3] - b.cov[1] * b.cov[2];
    double det_prod = det_a * det_b;

    constexpr double kPsdTolerance = 1e-9;
    if (det_prod < -kPsdTolerance) {
        throw NumericError("frechet_distance: covariance product is not PSD");
    }
    det_prod = std::max(det_prod, 0.0);
    double sqrt_arg = tr_prod + 2.0 * std::sqrt(det_prod);
    if (sqrt_arg < -kPsdTolerance) {
        throw NumericError("frechet_distance: covariance product is not PSD");
    }
    sqrt_arg = std::max(sqrt_arg, 0.0);

    const double value = mean_term + tr_a + tr_b - 2.0 * std::sqrt(sqrt_arg);
    return std::max(value, 0.0);
}

std::size_t ModeHistogram::total() const {
    std::size_t t = unassigned;
    for (std::size_t c : counts) t += c;
    return t;
}

std::vector<double> ModeHistogram::probabilities() const {
    const std::size_t t = total();
    if (t == 0) throw UsageError("empty histogram has no probabilities");
    std::vector<double> p;
    p.reserve(counts.size() + 1);
    for (std::size_t c : counts) {
        p.push_back(static_cast<double>(c) / static_cast<double>(t));
    }
    p.push_back(static_cast<double>(unassigned) / static_cast<double>(t));
    return p;
}

double tvd(const ModeHistogram& p, const ModeHistogram& q) {
    if (p.counts.size() != q.counts.size()) {
        throw UsageError("tvd: histograms have different mode universes");
    }
    const std::vector<double> pp = p.probabilities();
    const std::vector<double> qp = q.probabilities();
    double acc = 0.0;
    for (std::size_t i = 0; i < pp.size(); ++i) {
        acc += std::abs(pp[i] - qp[i]);
    }
    return 0.5 * acc;
}

ModeHistogram assign_modes(const Matrix& samples,
                           std::span<const std::array<double, 2>> centers,
                           double sigma) {
    if (centers.empty()) throw UsageError("assign_modes: no centers");
    if (!(sigma > 0.0)) throw UsageError("assign_modes: sigma must be positive");
    if (samples.cols() != 2) {
        throw StructuralError("assign_modes expects 2D samples");
    }
    ModeHistogram hist;
    hist.counts.assign(centers.size(), 0);
    const double limit_sq = 9.0 * sigma * sigma;
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        const double x = samples(i, 0);
        const double y = samples(i, 1);
        std::size_t best = 0;
        double best_sq = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < centers.size(); ++m) {
            const double dx = x - centers[m][0];
            const double dy = y - centers[m][1];
            const double d_sq = dx * dx + dy * dy;
            if (d_sq < best_sq) {
                best_sq = d_sq;
                best = m;
            }
        }
        if (best_sq <= limit_sq) {
            ++hist.counts[best];
        } else {
            ++hist.unassigned;
        }
    }
    return hist;
}

int modes_covered(const ModeHistogram& hist, double coverage_threshold) {
    const double n = static_cast<double>(hist.total());
    int covered = 0;
    for (std::size_t c : hist.counts) {
        if (static_cast<double>(c) >= coverage_threshold * n && c > 0) {
            ++covered;
        }
    }
    return covered;
}

double high_quality_fraction(const ModeHistogram& hist) {
    const std::size_t t = hist.total();
    if (t == 0) return 0.0;
    return static_cast<double>(t - hist.unassigned) / static_cast<double>(t);
}

}  // namespace mustangs
