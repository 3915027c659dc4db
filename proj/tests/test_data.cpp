#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mustangs/data.hpp"
#include "mustangs/metrics.hpp"

using namespace mustangs;

TEST_CASE("ring8 and grid25 have the documented geometry") {
    const MixtureSpec ring = MixtureSpec::ring8();
    REQUIRE(ring.centers.size() == 8);
    for (const auto& c : ring.centers) {
        CHECK(std::hypot(c[0], c[1]) == doctest::Approx(2.0).epsilon(1e-12));
    }
    const MixtureSpec grid = MixtureSpec::grid25();
    REQUIRE(grid.centers.size() == 25);
    for (const auto& c : grid.centers) {
        CHECK(c[0] >= -2.0);
        CHECK(c[0] <= 2.0);
        CHECK(c[1] >= -2.0);
        CHECK(c[1] <= 2.0);
    }
}

TEST_CASE("custom mixtures validate their inputs") {
    CHECK_THROWS_AS(MixtureSpec::custom({}, 0.05), UsageError);
    CHECK_THROWS_AS(MixtureSpec::custom({{0, 0}, {0, 0}}, 0.05), UsageError);
    CHECK_THROWS_AS(MixtureSpec::custom({{0, 0}}, 0.0), UsageError);
}

TEST_CASE("sigma -> 0 limit puts samples on the centers") {
    const MixtureSpec spec = MixtureSpec::ring8(1e-12);
    Rng rng = Rng::stream(7, 0);
    const Matrix samples = sample_real(spec, 200, rng);
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        double best = 1e300;
        for (const auto& c : spec.centers) {
            best = std::min(best, std::hypot(samples(i, 0) - c[0],
                                             samples(i, 1) - c[1]));
        }
        CHECK(best < 1e-9);
    }
}

TEST_CASE("per-mode counts follow the binomial expectation") {
    const MixtureSpec spec = MixtureSpec::ring8();
    Rng rng = Rng::stream(11, 0);
    const std::size_t n = 80000;
    const Matrix samples = sample_real(spec, n, rng);
    const ModeHistogram hist = assign_modes(samples, spec.centers, spec.sigma);
    // Binomial(n, 1/8): mean 10000, sd = sqrt(n * p * (1-p)) ~ 93.5.
    const double mean = static_cast<double>(n) / 8.0;
    const double sd = std::sqrt(static_cast<double>(n) * (1.0 / 8.0) * (7.0 / 8.0));
    for (std::size_t m = 0; m < 8; ++m) {
        CHECK(std::abs(static_cast<double>(hist.counts[m]) - mean) < 5.0 * sd);
    }
}

TEST_CASE("same seed gives identical sample matrices") {
    const MixtureSpec spec = MixtureSpec::grid25();
    const Matrix a = sample_real(spec, 500, std::uint64_t{99});
    const Matrix b = sample_real(spec, 500, std::uint64_t{99});
    CHECK(a == b);
}

TEST_CASE("latent batch moments")
{
    Rng rng = Rng::stream(13, 0);
    const std::size_t n = 200000;
    const Matrix z = latent_batch(n, 5, rng);
    double mean = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) mean += z.data()[i];
    mean /= static_cast<double>(z.size());
    double var = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        var += (z.data()[i] - mean) * (z.data()[i] - mean);
    }
    var /= static_cast<double>(z.size() - 1);
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("latent batches advance the stream and respect the shape") {
    Rng rng = Rng::stream(17, 0);
    const Matrix first = latent_batch(10, 3, rng);
    const Matrix second = latent_batch(10, 3, rng);
    CHECK(first.rows() == 10);
    CHECK(first.cols() == 3);
    CHECK(!(first == second));

    Rng replay = Rng::stream(17, 0);
    CHECK(latent_batch(10, 3, replay) == first);
}

TEST_CASE("metric noise floors between independent real draws") {
    // These floors bound estimator noise for the acceptance thresholds.
    const MixtureSpec spec = MixtureSpec::ring8();
    Rng rng_a = Rng::stream(1001, 0);
    Rng rng_b = Rng::stream(1002, 0);
    const Matrix a = sample_real(spec, 10000, rng_a);
    const Matrix b = sample_real(spec, 10000, rng_b);
    const double fd = frechet_distance(GaussianFit::from_samples(a),
                                       GaussianFit::from_samples(b));
    CHECK(fd >= 0.0);
    CHECK(fd < 0.005);
    const double diversity_gap = tvd(assign_modes(a, spec.centers, spec.sigma),
                                     assign_modes(b, spec.centers, spec.sigma));
    CHECK(diversity_gap < 0.03);
}
