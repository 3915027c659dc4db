#include <cmath>
#include <numbers>

#include "mustangs/data.hpp"
#include "mustangs/errors.hpp"

namespace mustangs {

MixtureSpec MixtureSpec::ring8(double sigma) {
    MixtureSpec spec;
    spec.name = "ring8";
    spec.sigma = sigma;
    for (int k = 0; k < 8; ++k) {
        const double angle = 2.0 * std::numbers::pi * k / 8.0;
        spec.centers.push_back({2.0 * std::cos(angle), 2.0 * std::sin(angle)});
    }
    return spec;
}

MixtureSpec MixtureSpec::grid25(double sigma) {
    MixtureSpec spec;
    spec.name = "grid25";
    spec.sigma = sigma;
    for (int gy = -2; gy <= 2; ++gy) {
        for (int gx = -2; gx <= 2; ++gx) {
            spec.centers.push_back({static_cast<double>(gx),
                                    static_cast<double>(gy)});
        }
    }
    return spec;
}

MixtureSpec MixtureSpec::custom(std::vector<std::array<double, 2>> centers,
                                double sigma) {
    if (centers.empty()) throw UsageError("custom mixture needs >= 1 center");
    if (!(sigma > 0.0)) throw UsageError("mixture sigma must be positive");
    for (std::size_t i = 0; i < centers.size(); ++i) {
        for (std::size_t j = i + 1; j < centers.size(); ++j) {
            if (centers[i] == centers[j]) {
                throw UsageError("mixture centers must be distinct");
            }
        }
    }
    MixtureSpec spec;
    spec.name = "custom";
    spec.centers = std::move(centers);
    spec.sigma = sigma;
    return spec;
}

Matrix sample_real(const MixtureSpec& spec, std::size_t n, Rng& stream) {
    if (n < 1) throw UsageError("sample_real: n must be >= 1");
    if (spec.centers.empty()) throw UsageError("sample_real: no centers");
    Matrix out(n, kDataDim);
    const std::size_t modes = spec.centers.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = spec.centers[stream.below(modes)];
        out(i, 0) = c[0] + spec.sigma * stream.normal();
        out(i, 1) = c[1] + spec.sigma * stream.normal();
    }
    return out;
}

Matrix sample_real(const MixtureSpec& spec, std::size_t n, std::uint64_t seed) {
    Rng stream = Rng::stream(seed, 0);
    return sample_real(spec, n, stream);
}

Matrix latent_batch(std::size_t n, std::size_t dim, Rng& stream) {
    if (n < 1 || dim < 1) throw UsageError("latent_batch: n and dim must be >= 1");
    Matrix out(n, dim);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data()[i] = stream.normal();
    }
    return out;
}

}  // namespace mustangs
