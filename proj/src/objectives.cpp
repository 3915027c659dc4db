#include <cmath>
#include <string>

#include "mustangs/errors.hpp"
#include "mustangs/objectives.hpp"

namespace mustangs {

namespace {

double mean_log(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += std::log(x);
    return acc / static_cast<double>(v.size());
}

double mean_log1m(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += std::log(1.0 - x);
    return acc / static_cast<double>(v.size());
}

void require_nonempty(std::span<const double> v, const char* what) {
    if (v.empty()) {
        throw UsageError(std::string(what) + ": empty output vector");
    }
}

}  // namespace

const char* to_string(ObjectiveKind kind) {
    switch (kind) {
        case ObjectiveKind::Bce: return "bce";
        case ObjectiveKind::Lse: return "lse";
        case ObjectiveKind::Heu: return "heu";
    }
    return "?";
}

ObjectiveKind parse_objective(std::string_view text) {
    if (text == "bce") return ObjectiveKind::Bce;
    if (text == "lse") return ObjectiveKind::Lse;
    if (text == "heu") return ObjectiveKind::Heu;
    throw UsageError("unknown objective '" + std::string(text) +
                     "' (expected bce|lse|heu)");
}

double generator_loss(ObjectiveKind kind, std::span<const double> d_on_fake) {
    require_nonempty(d_on_fake, "generator_loss");
    switch (kind) {
        case ObjectiveKind::Bce:
            return mean_log1m(d_on_fake);
        case ObjectiveKind::Heu:
            return -mean_log(d_on_fake);
        case ObjectiveKind::Lse: {
            double acc = 0.0;
            for (double d : d_on_fake) acc += (d - 1.0) * (d - 1.0);
            return acc / static_cast<double>(d_on_fake.size());
        }
    }
    throw UsageError("generator_loss: bad kind");
}

double discriminator_loss(ObjectiveKind kind, std::span<const double> d_on_real,
                          std::span<const double> d_on_fake) {
    require_nonempty(d_on_real, "discriminator_loss");
    require_nonempty(d_on_fake, "discriminator_loss");
    switch (kind) {
        case ObjectiveKind::Bce:
        case ObjectiveKind::Heu:
            return -mean_log(d_on_real) - mean_log1m(d_on_fake);
        case ObjectiveKind::Lse: {
            double acc_real = 0.0;
            for (double d : d_on_real) acc_real += (d - 1.0) * (d - 1.0);
            double acc_fake = 0.0;
            for (double d : d_on_fake) acc_fake += d * d;
            return acc_real / static_cast<double>(d_on_real.size()) +
                   acc_fake / static_cast<double>(d_on_fake.size());
        }
    }
    throw UsageError("discriminator_loss: bad kind");
}

namespace {

// dLoss/d(D output) for the generator objectives; the 1/n mean factor is
// baked in so the result feeds backward() directly.
Matrix generator_upstream(ObjectiveKind kind, const Matrix& d_fake) {
    Matrix up(d_fake.rows(), d_fake.cols());
    const double n = static_cast<double>(d_fake.size());
    for (std::size_t i = 0; i < d_fake.size(); ++i) {
        const double a = d_fake.data()[i];
        switch (kind) {
            case ObjectiveKind::Bce:
                up.data()[i] = -1.0 / (n * (1.0 - a));
                break;
            case ObjectiveKind::Heu:
                up.data()[i] = -1.0 / (n * a);
                break;
            case ObjectiveKind::Lse:
                up.data()[i] = 2.0 * (a - 1.0) / n;
                break;
        }
    }
    return up;
}

}  // namespace

GradientSet generator_loss_gradient(ObjectiveKind kind, const Genome& gen,
                                    const Genome& disc, const Matrix& latent) {
    if (gen.role != Role::Generator || disc.role != Role::Discriminator) {
        throw UsageError("generator_loss_gradient: role mismatch");
    }
    ForwardCache gen_cache;
    const Matrix fake = forward_cached(gen, latent, gen_cache);

    ForwardCache disc_cache;
    const Matrix d_fake = forward_cached(disc, fake, disc_cache);

    const Matrix upstream = generator_upstream(kind, d_fake);
    Matrix d_input_grad;
    backward(disc, upstream, disc_cache, &d_input_grad);
    return backward(gen, d_input_grad, gen_cache);
}

GradientSet discriminator_loss_gradient(ObjectiveKind kind, const Genome& disc,
                                        const Genome& gen, const Matrix& real,
                                        const Matrix& latent) {
    if (gen.role != Role::Generator || disc.role != Role::Discriminator) {
        throw UsageError("discriminator_loss_gradient: role mismatch");
    }
    const Matrix fake = forward(gen, latent);

    ForwardCache real_cache;
    const Matrix d_real = forward_cached(disc, real, real_cache);
    ForwardCache fake_cache;
    const Matrix d_fake = forward_cached(disc, fake, fake_cache);

    Matrix up_real(d_real.rows(), d_real.cols());
    Matrix up_fake(d_fake.rows(), d_fake.cols());
    const double n_real = static_cast<double>(d_real.size());
    const double n_fake = static_cast<double>(d_fake.size());
    for (std::size_t i = 0; i < d_real.size(); ++i) {
        const double a = d_real.data()[i];
        up_real.data()[i] = (kind == ObjectiveKind::Lse)
                                ? 2.0 * (a - 1.0) / n_real
                                : -1.0 / (n_real * a);
    }
    for (std::size_t i = 0; i < d_fake.size(); ++i) {
        const double a = d_fake.data()[i];
        up_fake.data()[i] = (kind == ObjectiveKind::Lse)
                                ? 2.0 * a / n_fake
                                : 1.0 / (n_fake * (1.0 - a));
    }

    GradientSet grads = backward(disc, up_real, real_cache);
    grads.accumulate(backward(disc, up_fake, fake_cache));
    return grads;
}

}  // namespace mustangs
