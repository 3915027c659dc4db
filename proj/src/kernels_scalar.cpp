#include <algorithm>
#include <cmath>
#include <cstring>

#include "mustangs/kernels.hpp"

// Scalar reference kernels. These define the semantics the SIMD variants
// are tested against: reductions accumulate left to right, elementwise
// kernels do one unfused multiply/add per element.

namespace mustangs::kernels::detail {

namespace {

void affine_forward_scalar(const double* x, std::size_t batch, std::size_t in,
                           const double* w, const double* bias,
                           std::size_t out, double* y) {
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xr = x + b * in;
        double* yr = y + b * out;
        for (std::size_t o = 0; o < out; ++o) {
            const double* wr = w + o * in;
            double acc = 0.0;
            for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
            yr[o] = acc + bias[o];
        }
    }
}

void weight_grad_scalar(const double* delta, const double* x,
                        std::size_t batch, std::size_t in, std::size_t out,
                        double* dw) {
    std::memset(dw, 0, sizeof(double) * in * out);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xr = x + b * in;
        const double* dr = delta + b * out;
        for (std::size_t o = 0; o < out; ++o) {
            const double d = dr[o];
            double* dwr = dw + o * in;
            for (std::size_t i = 0; i < in; ++i) dwr[i] += d * xr[i];
        }
    }
}

void bias_grad_scalar(const double* delta, std::size_t batch, std::size_t out,
                      double* db) {
    std::memset(db, 0, sizeof(double) * out);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* dr = delta + b * out;
        for (std::size_t o = 0; o < out; ++o) db[o] += dr[o];
    }
}

void input_grad_scalar(const double* delta, const double* w, std::size_t batch,
                       std::size_t in, std::size_t out, double* dx) {
    std::memset(dx, 0, sizeof(double) * batch * in);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* dr = delta + b * out;
        double* dxr = dx + b * in;
        for (std::size_t o = 0; o < out; ++o) {
            const double d = dr[o];
            const double* wr = w + o * in;
            for (std::size_t i = 0; i < in; ++i) dxr[i] += d * wr[i];
        }
    }
}

void axpy_scalar(std::size_t n, double alpha, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void tanh_eval_scalar(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh_backward_scalar(std::size_t n, const double* activated,
                          double* grad) {
    for (std::size_t i = 0; i < n; ++i) {
        grad[i] *= 1.0 - activated[i] * activated[i];
    }
}

void sigmoid_eval_scalar(std::size_t n, const double* x, double* y,
                         double clamp_eps) {
    const double hi = 1.0 - clamp_eps;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = 1.0 / (1.0 + std::exp(-x[i]));
        y[i] = std::clamp(s, clamp_eps, hi);
    }
}

void sigmoid_backward_scalar(std::size_t n, const double* activated,
                             double* grad) {
    for (std::size_t i = 0; i < n; ++i) {
        grad[i] *= activated[i] * (1.0 - activated[i]);
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        affine_forward_scalar, weight_grad_scalar,    bias_grad_scalar,
        input_grad_scalar,     axpy_scalar,           tanh_eval_scalar,
        tanh_backward_scalar,  sigmoid_eval_scalar,   sigmoid_backward_scalar,
    };
    return table;
}

}  // namespace mustangs::kernels::detail
