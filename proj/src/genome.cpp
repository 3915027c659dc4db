#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "mustangs/errors.hpp"
#include "mustangs/genome.hpp"
#include "mustangs/kernels.hpp"

namespace mustangs {

namespace {

void check_layer_finite(const Matrix& m, std::size_t layer) {
    if (!m.all_finite()) {
        throw NumericError("non-finite output at layer " + std::to_string(layer));
    }
}

Matrix run_forward(const Genome& g, const Matrix& input, ForwardCache* cache) {
    if (g.layer_dims.size() < 2 || g.weights.size() != g.layer_dims.size() - 1) {
        throw StructuralError("genome has inconsistent layer structure");
    }
    if (input.cols() != g.input_dim()) {
        throw StructuralError("input has " + std::to_string(input.cols()) +
                              " columns, genome expects " +
                              std::to_string(g.input_dim()));
    }
    if (cache != nullptr) {
        cache->activations.clear();
        cache->activations.push_back(input);
    }
    const std::size_t batch = input.rows();
    Matrix current = input;
    for (std::size_t l = 0; l < g.layer_count(); ++l) {
        const Matrix& w = g.weights[l];
        const std::vector<double>& b = g.biases[l];
        if (w.rows() != g.layer_dims[l + 1] || w.cols() != g.layer_dims[l] ||
            b.size() != g.layer_dims[l + 1]) {
            throw StructuralError("layer " + std::to_string(l) +
                                  " parameter shapes do not match layer_dims");
        }
        Matrix next(batch, w.rows());
        kernels::affine_forward(current.data(), batch, w.cols(), w.data(),
                                b.data(), w.rows(), next.data());
        // Checked before the activation: tanh/sigmoid would squash an
        // infinity into a finite value and hide the blow-up.
        check_layer_finite(next, l);
        const bool last = l + 1 == g.layer_count();
        if (!last) {
            kernels::tanh_eval(next.size(), next.data(), next.data());
        } else if (g.role == Role::Discriminator) {
            kernels::sigmoid_eval(next.size(), next.data(), next.data(),
                                  kSigmoidClamp);
        }
        if (cache != nullptr) cache->activations.push_back(next);
        current = std::move(next);
    }
    return current;
}

}  // namespace

const char* to_string(Role role) {
    return role == Role::Generator ? "generator" : "discriminator";
}

std::size_t Genome::param_count() const {
    std::size_t n = 0;
    for (const Matrix& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

Genome Genome::random_init(Role role, std::vector<std::size_t> dims,
                           double learning_rate, double init_std, Rng& rng) {
    if (dims.size() < 2) {
        throw StructuralError("genome needs at least input and output dims");
    }
    Genome g;
    g.role = role;
    g.layer_dims = std::move(dims);
    g.learning_rate = learning_rate;
    for (std::size_t l = 0; l + 1 < g.layer_dims.size(); ++l) {
        Matrix w(g.layer_dims[l + 1], g.layer_dims[l]);
        for (std::size_t i = 0; i < w.size(); ++i) {
            w.data()[i] = init_std * rng.normal();
        }
        g.weights.push_back(std::move(w));
        g.biases.emplace_back(g.layer_dims[l + 1], 0.0);
    }
    return g;
}

bool GradientSet::all_finite() const {
    for (const Matrix& w : weight_grads) {
        if (!w.all_finite()) return false;
    }
    for (const auto& b : bias_grads) {
        for (double v : b) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

void GradientSet::scale(double factor) {
    for (Matrix& w : weight_grads) {
        for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] *= factor;
    }
    for (auto& b : bias_grads) {
        for (double& v : b) v *= factor;
    }
}

void GradientSet::accumulate(const GradientSet& other) {
    if (other.weight_grads.size() != weight_grads.size()) {
        throw StructuralError("GradientSet::accumulate: layer count mismatch");
    }
    for (std::size_t l = 0; l < weight_grads.size(); ++l) {
        if (!weight_grads[l].same_shape(other.weight_grads[l])) {
            throw StructuralError("GradientSet::accumulate: shape mismatch");
        }
        kernels::axpy(weight_grads[l].size(), 1.0, other.weight_grads[l].data(),
                      weight_grads[l].data());
        kernels::axpy(bias_grads[l].size(), 1.0, other.bias_grads[l].data(),
                      bias_grads[l].data());
    }
}

Matrix forward(const Genome& g, const Matrix& input) {
    return run_forward(g, input, nullptr);
}

Matrix forward_cached(const Genome& g, const Matrix& input,
                      ForwardCache& cache) {
    return run_forward(g, input, &cache);
}

GradientSet backward(const Genome& g, const Matrix& upstream,
                     const ForwardCache& cache, Matrix* input_gradient) {
    const std::size_t layers = g.layer_count();
    if (cache.empty() || cache.activations.size() != layers + 1) {
        throw UsageError("backward requires the cache from forward_cached on "
                         "the same genome");
    }
    const std::size_t batch = cache.activations.front().rows();
    if (upstream.rows() != batch || upstream.cols() != g.output_dim()) {
        throw UsageError("upstream gradient shape does not match the cached "
                         "forward pass");
    }
    for (std::size_t l = 0; l <= layers; ++l) {
        if (cache.activations[l].cols() != g.layer_dims[l]) {
            throw UsageError("cache does not match genome layer dims");
        }
    }

    GradientSet grads;
    grads.weight_grads.resize(layers);
    grads.bias_grads.resize(layers);

    // delta = dLoss/d(pre-activation of the current layer)
    Matrix delta = upstream;
    if (g.role == Role::Discriminator) {
        kernels::sigmoid_backward(delta.size(),
                                  cache.activations[layers].data(),
                                  delta.data());
    }
    for (std::size_t l = layers; l-- > 0;) {
        const Matrix& layer_input = cache.activations[l];
        grads.weight_grads[l] = Matrix(g.weights[l].rows(), g.weights[l].cols());
        grads.bias_grads[l].assign(g.biases[l].size(), 0.0);
        kernels::weight_grad(delta.data(), layer_input.data(), batch,
                             layer_input.cols(), delta.cols(),
                             grads.weight_grads[l].data());
        kernels::bias_grad(delta.data(), batch, delta.cols(),
                           grads.bias_grads[l].data());
        if (l > 0) {
            Matrix prev(batch, g.layer_dims[l]);
            kernels::input_grad(delta.data(), g.weights[l].data(), batch,
                                prev.cols(), delta.cols(), prev.data());
            kernels::tanh_backward(prev.size(), layer_input.data(), prev.data());
            delta = std::move(prev);
        } else if (input_gradient != nullptr) {
            *input_gradient = Matrix(batch, g.layer_dims[0]);
            kernels::input_grad(delta.data(), g.weights[0].data(), batch,
                                input_gradient->cols(), delta.cols(),
                                input_gradient->data());
        }
    }
    return grads;
}

void sgd_step(Genome& g, const GradientSet& grads, double lr) {
    if (grads.weight_grads.size() != g.layer_count() ||
        grads.bias_grads.size() != g.layer_count()) {
        throw StructuralError("gradient layer count does not match genome");
    }
    for (std::size_t l = 0; l < g.layer_count(); ++l) {
        if (!grads.weight_grads[l].same_shape(g.weights[l]) ||
            grads.bias_grads[l].size() != g.biases[l].size()) {
            throw StructuralError("gradient shapes do not match genome");
        }
    }
    if (!grads.all_finite()) {
        throw NumericError("non-finite gradient; sgd step rejected");
    }
    for (std::size_t l = 0; l < g.layer_count(); ++l) {
        kernels::axpy(g.weights[l].size(), -lr, grads.weight_grads[l].data(),
                      g.weights[l].data());
        kernels::axpy(g.biases[l].size(), -lr, grads.bias_grads[l].data(),
                      g.biases[l].data());
    }
}

Genome clone_genome(const Genome& g) { return g; }

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
    }
}

struct Reader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos{0};

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) {
            throw FormatError("truncated genome data");
        }
    }
    std::uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
        }
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
        }
        return std::bit_cast<double>(v);
    }
};

constexpr char kMagic[4] = {'C', 'G', 'G', '1'};

}  // namespace

std::vector<std::uint8_t> serialize(const Genome& g) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(static_cast<std::uint8_t>(g.role));
    put_u32(out, static_cast<std::uint32_t>(g.layer_dims.size()));
    for (std::size_t d : g.layer_dims) {
        put_u32(out, static_cast<std::uint32_t>(d));
    }
    put_f64(out, g.learning_rate);
    for (std::size_t l = 0; l < g.layer_count(); ++l) {
        for (std::size_t i = 0; i < g.weights[l].size(); ++i) {
            put_f64(out, g.weights[l].data()[i]);
        }
        for (double b : g.biases[l]) put_f64(out, b);
    }
    return out;
}

Genome deserialize(std::span<const std::uint8_t> bytes) {
    Reader r{bytes};
    r.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("bad genome magic; expected CGG1");
    }
    r.pos = 4;
    const std::uint8_t role = r.u8();
    if (role != 'G' && role != 'D') {
        throw FormatError("bad genome role byte");
    }
    const std::uint32_t dim_count = r.u32();
    if (dim_count < 2 || dim_count > 64) {
        throw FormatError("implausible layer-dim count");
    }
    Genome g;
    g.role = static_cast<Role>(role);
    g.layer_dims.resize(dim_count);
    for (auto& d : g.layer_dims) {
        d = r.u32();
        if (d == 0) throw FormatError("zero layer dim");
    }
    g.learning_rate = r.f64();
    for (std::size_t l = 0; l + 1 < dim_count; ++l) {
        Matrix w(g.layer_dims[l + 1], g.layer_dims[l]);
        for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = r.f64();
        g.weights.push_back(std::move(w));
        std::vector<double> b(g.layer_dims[l + 1]);
        for (double& v : b) v = r.f64();
        g.biases.push_back(std::move(b));
    }
    if (r.pos != bytes.size()) {
        throw FormatError("trailing bytes after genome data");
    }
    return g;
}

void save_genome(const Genome& g, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = serialize(g);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + path.string());
}

Genome load_genome(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace mustangs
