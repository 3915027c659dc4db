#pragma once

#include <cstddef>

namespace mustangs::kernels {

// Data-parallel inner loops behind the genome math. Every operation has a
// scalar reference implementation and, on x86-64, an AVX2 variant selected
// at runtime. Two equivalence classes, both covered by tests:
//   bitwise:   axpy, *_backward, weight/bias/input grads - same unfused
//              multiply/add per element in the same order on both backends.
//   tolerance: affine_forward (multi-lane FMA accumulation) and
//              tanh/sigmoid evaluation (vector exp vs libm) - agree with
//              the scalar reference to a few ulp.
//
// Backend selection: MUSTANGS_KERNEL=scalar|avx2|auto (env), or
// set_backend() programmatically. Selection is deterministic per process;
// replay guarantees hold per selected backend.

enum class Backend { Auto, Scalar, Avx2 };

// Force a backend. Throws UsageError if the requested backend is not
// available on this machine/build.
void set_backend(Backend backend);

// Backend actually in use after resolution (never Auto).
Backend resolved_backend();
const char* backend_name();

// True when the AVX2 variant is compiled in and the CPU supports it.
bool avx2_available();

// y[b,o] = sum_i x[b,i] * w[o,i] + bias[o]
// x: batch x in, w: out x in (row-major), bias: out, y: batch x out.
void affine_forward(const double* x, std::size_t batch, std::size_t in,
                    const double* w, const double* bias, std::size_t out,
                    double* y);

// dw[o,i] = sum_b delta[b,o] * x[b,i]; overwrites dw (out x in).
void weight_grad(const double* delta, const double* x, std::size_t batch,
                 std::size_t in, std::size_t out, double* dw);

// db[o] = sum_b delta[b,o]; overwrites db.
void bias_grad(const double* delta, std::size_t batch, std::size_t out,
               double* db);

// dx[b,i] = sum_o delta[b,o] * w[o,i]; overwrites dx (batch x in).
void input_grad(const double* delta, const double* w, std::size_t batch,
                std::size_t in, std::size_t out, double* dx);

// y[i] += alpha * x[i]
void axpy(std::size_t n, double alpha, const double* x, double* y);

// y[i] = tanh(x[i])
void tanh_eval(std::size_t n, const double* x, double* y);

// grad[i] *= 1 - a[i]^2, with a the tanh-activated values.
void tanh_backward(std::size_t n, const double* activated, double* grad);

// y[i] = clamp(1/(1+exp(-x[i])), clamp_eps, 1-clamp_eps)
void sigmoid_eval(std::size_t n, const double* x, double* y, double clamp_eps);

// grad[i] *= a[i] * (1 - a[i]), with a the sigmoid-activated values.
void sigmoid_backward(std::size_t n, const double* activated, double* grad);

namespace detail {

struct KernelTable {
    void (*affine_forward)(const double*, std::size_t, std::size_t,
                           const double*, const double*, std::size_t, double*);
    void (*weight_grad)(const double*, const double*, std::size_t, std::size_t,
                        std::size_t, double*);
    void (*bias_grad)(const double*, std::size_t, std::size_t, double*);
    void (*input_grad)(const double*, const double*, std::size_t, std::size_t,
                       std::size_t, double*);
    void (*axpy)(std::size_t, double, const double*, double*);
    void (*tanh_eval)(std::size_t, const double*, double*);
    void (*tanh_backward)(std::size_t, const double*, double*);
    void (*sigmoid_eval)(std::size_t, const double*, double*, double);
    void (*sigmoid_backward)(std::size_t, const double*, double*);
};

const KernelTable& scalar_table();
#if defined(MUSTANGS_AVX2_TU)
const KernelTable& avx2_table();
#endif

}  // namespace detail

}  // namespace mustangs::kernels
