#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mustangs/matrix.hpp"
#include "mustangs/rng.hpp"

namespace mustangs {

inline constexpr std::size_t kDataDim = 2;
inline constexpr std::size_t kLatentDim = 5;

enum class BatchKind { Real, Latent };

struct Batch {
    Matrix samples;
    BatchKind kind{BatchKind::Real};
};

// Synthetic 2D Gaussian-mixture targets. ring8: 8 modes on a radius-2
// circle; grid25: 5x5 lattice on [-2,2]^2; both sigma 0.05 by default.
struct MixtureSpec {
    std::string name;
    std::vector<std::array<double, 2>> centers;
    double sigma{0.05};

    static MixtureSpec ring8(double sigma = 0.05);
    static MixtureSpec grid25(double sigma = 0.05);
    static MixtureSpec custom(std::vector<std::array<double, 2>> centers,
                              double sigma);
};

// n samples, each a uniformly chosen center plus isotropic N(0, sigma^2)
// noise. Consumes the stream; same stream state gives the same matrix.
Matrix sample_real(const MixtureSpec& spec, std::size_t n, Rng& stream);
Matrix sample_real(const MixtureSpec& spec, std::size_t n, std::uint64_t seed);

// n x dim standard-normal latent batch; consecutive calls advance the stream.
Matrix latent_batch(std::size_t n, std::size_t dim, Rng& stream);

}  // namespace mustangs
