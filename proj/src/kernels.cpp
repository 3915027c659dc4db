#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "mustangs/errors.hpp"
#include "mustangs/kernels.hpp"

namespace mustangs::kernels {

namespace {

using detail::KernelTable;

bool cpu_has_avx2() {
#if defined(MUSTANGS_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* table_for(Backend backend) {
    switch (backend) {
        case Backend::Scalar:
            return &detail::scalar_table();
        case Backend::Avx2:
#if defined(MUSTANGS_AVX2_TU)
            if (cpu_has_avx2()) return &detail::avx2_table();
#endif
            throw UsageError("kernel backend avx2 requested but not available");
        case Backend::Auto:
            break;
    }
#if defined(MUSTANGS_AVX2_TU)
    if (cpu_has_avx2()) return &detail::avx2_table();
#endif
    return &detail::scalar_table();
}

Backend env_backend() {
    const char* env = std::getenv("MUSTANGS_KERNEL");
    if (env == nullptr || *env == '\0') return Backend::Auto;
    const std::string value(env);
    if (value == "auto") return Backend::Auto;
    if (value == "scalar") return Backend::Scalar;
    if (value == "avx2") return Backend::Avx2;
    throw UsageError("MUSTANGS_KERNEL must be one of auto|scalar|avx2, got '" +
                     value + "'");
}

struct Dispatch {
    std::atomic<const KernelTable*> table{nullptr};
    std::atomic<Backend> backend{Backend::Auto};

    const KernelTable& get() {
        const KernelTable* t = table.load(std::memory_order_acquire);
        if (t == nullptr) {
            const Backend wanted = env_backend();
            t = table_for(wanted);
            table.store(t, std::memory_order_release);
            backend.store(t == &detail::scalar_table() ? Backend::Scalar
                                                       : Backend::Avx2,
                          std::memory_order_release);
        }
        return *t;
    }
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

}  // namespace

void set_backend(Backend backend) {
    const KernelTable* t = table_for(backend);
    dispatch().table.store(t, std::memory_order_release);
    dispatch().backend.store(
        t == &detail::scalar_table() ? Backend::Scalar : Backend::Avx2,
        std::memory_order_release);
}

Backend resolved_backend() {
    dispatch().get();
    return dispatch().backend.load(std::memory_order_acquire);
}

const char* backend_name() {
    return resolved_backend() == Backend::Avx2 ? "avx2" : "scalar";
}

bool avx2_available() { return cpu_has_avx2(); }

void affine_forward(const double* x, std::size_t batch, std::size_t in,
                    const double* w, const double* bias, std::size_t out,
                    double* y) {
    dispatch().get().affine_forward(x, batch, in, w, bias, out, y);
}

void weight_grad(const double* delta, const double* x, std::size_t batch,
                 std::size_t in, std::size_t out, double* dw) {
    dispatch().get().weight_grad(delta, x, batch, in, out, dw);
}

void bias_grad(const double* delta, std::size_t batch, std::size_t out,
               double* db) {
    dispatch().get().bias_grad(delta, batch, out, db);
}

void input_grad(const double* delta, const double* w, std::size_t batch,
                std::size_t in, std::size_t out, double* dx) {
    dispatch().get().input_grad(delta, w, batch, in, out, dx);
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    dispatch().get().axpy(n, alpha, x, y);
}

void tanh_eval(std::size_t n, const double* x, double* y) {
    dispatch().get().tanh_eval(n, x, y);
}

void tanh_backward(std::size_t n, const double* activated, double* grad) {
    dispatch().get().tanh_backward(n, activated, grad);
}

void sigmoid_eval(std::size_t n, const double* x, double* y,
                  double clamp_eps) {
    dispatch().get().sigmoid_eval(n, x, y, clamp_eps);
}

void sigmoid_backward(std::size_t n, const double* activated, double* grad) {
    dispatch().get().sigmoid_backward(n, activated, grad);
}

}  // namespace mustangs::kernels
