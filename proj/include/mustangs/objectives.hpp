#pragma once

#include <span>
#include <string_view>

#include "mustangs/genome.hpp"
#include "mustangs/rng.hpp"

namespace mustangs {

// The three training objectives a mutation can draw. All losses are batch
// means and lower is better for the role being trained.
//
//   generator:      Bce  mean(log(1 - D(G(z))))        (minmax)
//                   Heu  -mean(log D(G(z)))            (non-saturating)
//                   Lse  mean((D(G(z)) - 1)^2)         (least squares)
//   discriminator:  Bce  -mean(log D(x)) - mean(log(1 - D(G(z))))
//                   Heu  same as Bce (the heuristic trick changes only the
//                        generator side)
//                   Lse  mean((D(x) - 1)^2) + mean(D(G(z))^2)
enum class ObjectiveKind { Bce, Lse, Heu };

inline constexpr ObjectiveKind kAllObjectives[] = {
    ObjectiveKind::Bce, ObjectiveKind::Lse, ObjectiveKind::Heu};

const char* to_string(ObjectiveKind kind);
ObjectiveKind parse_objective(std::string_view text);

// d_on_fake holds D(G(z)) values, all strictly inside (0,1) thanks to the
// discriminator output clamp. Throws UsageError on empty input.
double generator_loss(ObjectiveKind kind, std::span<const double> d_on_fake);
double discriminator_loss(ObjectiveKind kind, std::span<const double> d_on_real,
                          std::span<const double> d_on_fake);

// Gradient of the generator's `kind` loss with respect to the generator's
// parameters, with the discriminator frozen. latent is a batch of z rows.
GradientSet generator_loss_gradient(ObjectiveKind kind, const Genome& gen,
                                    const Genome& disc, const Matrix& latent);

// Gradient of the discriminator's `kind` loss with respect to its own
// parameters, with the generator frozen.
GradientSet discriminator_loss_gradient(ObjectiveKind kind, const Genome& disc,
                                        const Genome& gen, const Matrix& real,
                                        const Matrix& latent);

// How a mutation picks its objective: either a uniform draw from the
// cell's stream or a pinned constant. Pinned policies do not consume RNG,
// so a pinned-uniform run replays a fixed-loss run bit for bit.
struct ObjectivePolicy {
    bool uniform{true};
    ObjectiveKind pinned{ObjectiveKind::Bce};

    static ObjectivePolicy uniform_draw() { return {true, ObjectiveKind::Bce}; }
    static ObjectivePolicy pin(ObjectiveKind kind) { return {false, kind}; }

    ObjectiveKind draw(Rng& rng) const {
        if (!uniform) return pinned;
        return kAllObjectives[rng.below(3)];
    }
};

}  // namespace mustangs
