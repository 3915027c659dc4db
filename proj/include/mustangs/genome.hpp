#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mustangs/matrix.hpp"
#include "mustangs/rng.hpp"

namespace mustangs {

enum class Role : std::uint8_t { Generator = 'G', Discriminator = 'D' };

const char* to_string(Role role);

// Discriminator outputs are clamped into [kSigmoidClamp, 1-kSigmoidClamp]
// so no loss ever evaluates log(0).
inline constexpr double kSigmoidClamp = 1e-7;

// One evolvable individual: a dense feed-forward net with tanh hidden
// layers and a role-dependent output (generator linear, discriminator
// sigmoid). Value semantics throughout; a genome published to neighbors is
// copied, never shared mutably.
struct Genome {
    Role role{Role::Generator};
    std::vector<std::size_t> layer_dims;       // input dim first, output last
    std::vector<Matrix> weights;               // weights[l]: dims[l+1] x dims[l]
    std::vector<std::vector<double>> biases;   // biases[l]: dims[l+1]
    double learning_rate{0.0};
    std::uint64_t version{0};                  // publication counter, not serialized

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    std::size_t layer_count() const { return weights.size(); }
    std::size_t param_count() const;

    // Weights from N(0, init_std^2), biases zero.
    static Genome random_init(Role role, std::vector<std::size_t> dims,
                              double learning_rate, double init_std, Rng& rng);
};

// Activations captured during forward_cached: activations[0] is the input,
// activations[l+1] the post-activation output of layer l.
struct ForwardCache {
    std::vector<Matrix> activations;
    bool empty() const { return activations.empty(); }
};

struct GradientSet {
    std::vector<Matrix> weight_grads;
    std::vector<std::vector<double>> bias_grads;

    bool all_finite() const;
    void scale(double factor);
    void accumulate(const GradientSet& other);
};

// Runs the network on a batch (rows = samples). Throws StructuralError on
// dimension mismatch, NumericError naming the layer if an output goes
// non-finite.
Matrix forward(const Genome& g, const Matrix& input);
Matrix forward_cached(const Genome& g, const Matrix& input, ForwardCache& cache);

// Exact backprop. upstream is dLoss/d(output), batch x output_dim, with any
// 1/batch factors already applied. cache must come from forward_cached on
// the same genome and batch (UsageError otherwise). If input_gradient is
// non-null it receives dLoss/d(input), which chains the discriminator into
// generator training.
GradientSet backward(const Genome& g, const Matrix& upstream,
                     const ForwardCache& cache, Matrix* input_gradient = nullptr);

// p <- p - lr * grad for every parameter, in place. Non-finite gradients
// throw NumericError and leave the genome untouched. version is unchanged;
// publication is a separate act.
void sgd_step(Genome& g, const GradientSet& grads, double lr);

Genome clone_genome(const Genome& g);

// Checkpoint format (little-endian):
//   magic "CGG1"
//   role byte: 'G' or 'D'
//   u32 layer-dim count
//   u32 layer_dims[...]
//   f64 learning rate
//   per layer transition: weight matrix row-major f64s, then bias f64s
// Round-trips are bit-exact. version is runtime bookkeeping and not stored;
// deserialized genomes start at version 0.
std::vector<std::uint8_t> serialize(const Genome& g);
Genome deserialize(std::span<const std::uint8_t> bytes);

void save_genome(const Genome& g, const std::filesystem::path& path);
Genome load_genome(const std::filesystem::path& path);

}  // namespace mustangs
