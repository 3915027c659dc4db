#include <algorithm>
#include <cmath>
#include <cstring>
#include <immintrin.h>

#include "mustangs/kernels.hpp"

// AVX2 kernel variants. Elementwise kernels use unfused mul/add so they
// stay bit-identical to the scalar reference; affine_forward (FMA,
// multi-lane accumulation) and the exp-based tanh/sigmoid are
// tolerance-equivalent only (see kernels.hpp).

namespace mustangs::kernels::detail {

namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    const __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

void affine_forward_avx2(const double* x, std::size_t batch, std::size_t in,
                         const double* w, const double* bias, std::size_t out,
                         double* y) {
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xr = x + b * in;
        double* yr = y + b * out;
        for (std::size_t o = 0; o < out; ++o) {
            const double* wr = w + o * in;
            __m256d acc0 = _mm256_setzero_pd();
            __m256d acc1 = _mm256_setzero_pd();
            std::size_t i = 0;
            for (; i + 8 <= in; i += 8) {
                acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(xr + i),
                                       _mm256_loadu_pd(wr + i), acc0);
                acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(xr + i + 4),
                                       _mm256_loadu_pd(wr + i + 4), acc1);
            }
            for (; i + 4 <= in; i += 4) {
                acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(xr + i),
                                       _mm256_loadu_pd(wr + i), acc0);
            }
            double acc = hsum(_mm256_add_pd(acc0, acc1));
            for (; i < in; ++i) acc += xr[i] * wr[i];
            yr[o] = acc + bias[o];
        }
    }
}

// dst[i] += scale * src[i], vectorized with unfused mul/add.
void scaled_accumulate(std::size_t n, double scale, const double* src,
                       double* dst) {
    const __m256d s = _mm256_set1_pd(scale);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(s, _mm256_loadu_pd(src + i));
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
    }
    for (; i < n; ++i) dst[i] += scale * src[i];
}

void weight_grad_avx2(const double* delta, const double* x, std::size_t batch,
                      std::size_t in, std::size_t out, double* dw) {
    std::memset(dw, 0, sizeof(double) * in * out);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xr = x + b * in;
        const double* dr = delta + b * out;
        for (std::size_t o = 0; o < out; ++o) {
            scaled_accumulate(in, dr[o], xr, dw + o * in);
        }
    }
}

void bias_grad_avx2(const double* delta, std::size_t batch, std::size_t out,
                    double* db) {
    std::memset(db, 0, sizeof(double) * out);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* dr = delta + b * out;
        std::size_t o = 0;
        for (; o + 4 <= out; o += 4) {
            _mm256_storeu_pd(db + o, _mm256_add_pd(_mm256_loadu_pd(db + o),
                                                   _mm256_loadu_pd(dr + o)));
        }
        for (; o < out; ++o) db[o] += dr[o];
    }
}

void input_grad_avx2(const double* delta, const double* w, std::size_t batch,
                     std::size_t in, std::size_t out, double* dx) {
    std::memset(dx, 0, sizeof(double) * batch * in);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* dr = delta + b * out;
        double* dxr = dx + b * in;
        for (std::size_t o = 0; o < out; ++o) {
            scaled_accumulate(in, dr[o], w + o * in, dxr);
        }
    }
}

void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
    scaled_accumulate(n, alpha, x, y);
}

// Vectorized e^x for doubles: Cephes-style range reduction around ln 2
// plus a 2-6 Pade approximant, accurate to ~1 ulp on [-708, 708]. Feeds
// the tanh/sigmoid evaluation below; both are tolerance-class kernels
// (they agree with std::tanh/std::exp to a few ulp, not bitwise).
__m256d exp_pd(__m256d x) {
    // Clamp to the normal range so the 2^n exponent-bit scaling stays valid.
    x = _mm256_max_pd(_mm256_set1_pd(-708.0), _mm256_min_pd(_mm256_set1_pd(708.0), x));
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                      _MM_FROUND_TO_NEAREST_INT |
                                          _MM_FROUND_NO_EXC);
    // r = x - n*ln2, split for accuracy
    __m256d r = _mm256_sub_pd(x, _mm256_mul_pd(n, c1));
    r = _mm256_sub_pd(r, _mm256_mul_pd(n, c2));
    const __m256d r2 = _mm256_mul_pd(r, r);

    // exp(r) = 1 + 2r P(r^2) / (Q(r^2) - r P(r^2))
    const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
    const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
    const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
    const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
    const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
    const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
    const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);

    __m256d p = _mm256_fmadd_pd(p0, r2, p1);
    p = _mm256_fmadd_pd(p, r2, p2);
    p = _mm256_mul_pd(p, r);
    __m256d q = _mm256_fmadd_pd(q0, r2, q1);
    q = _mm256_fmadd_pd(q, r2, q2);
    q = _mm256_fmadd_pd(q, r2, q3);
    const __m256d expr =
        _mm256_add_pd(_mm256_set1_pd(1.0),
                      _mm256_div_pd(_mm256_add_pd(p, p), _mm256_sub_pd(q, p)));

    // scale by 2^n via exponent bits
    const __m128i ni = _mm256_cvtpd_epi32(n);
    const __m256i nl = _mm256_cvtepi32_epi64(ni);
    const __m256i pow2 = _mm256_slli_epi64(
        _mm256_add_epi64(nl, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(expr, _mm256_castsi256_pd(pow2));
}

void tanh_eval_avx2(std::size_t n, const double* x, double* y) {
    // |x| >= 0.625: 1 - 2/(e^{2|x|}+1), saturating to 1 from |x| >= 19.
    // |x| <  0.625: x + x^3 P(x^2)/Q(x^2) (Cephes rational form), which
    // avoids the cancellation the exp form suffers near zero.
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d limit = _mm256_set1_pd(19.0);
    const __m256d cutoff = _mm256_set1_pd(0.625);
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        const __m256d a = _mm256_andnot_pd(sign_mask, v);
        const __m256d sign = _mm256_and_pd(sign_mask, v);

        const __m256d e = exp_pd(_mm256_mul_pd(two, a));
        __m256d big =
            _mm256_sub_pd(one, _mm256_div_pd(two, _mm256_add_pd(e, one)));
        big = _mm256_blendv_pd(big, one, _mm256_cmp_pd(a, limit, _CMP_GE_OQ));

        const __m256d z = _mm256_mul_pd(a, a);
        __m256d p = _mm256_set1_pd(-9.64399179425052238628e-1);
        p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(-9.92877231001918586564e1));
        p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(-1.61468768441708447952e3));
        __m256d q = _mm256_add_pd(z, _mm256_set1_pd(1.12811678491632931402e2));
        q = _mm256_fmadd_pd(q, z, _mm256_set1_pd(2.23548839060100448583e3));
        q = _mm256_fmadd_pd(q, z, _mm256_set1_pd(4.84406305325125486048e3));
        const __m256d small = _mm256_add_pd(
            _mm256_mul_pd(a, _mm256_mul_pd(z, _mm256_div_pd(p, q))), a);

        const __m256d t = _mm256_blendv_pd(
            big, small, _mm256_cmp_pd(a, cutoff, _CMP_LT_OQ));
        _mm256_storeu_pd(y + i, _mm256_or_pd(t, sign));
    }
    for (; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh_backward_avx2(std::size_t n, const double* activated, double* grad) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_loadu_pd(activated + i);
        const __m256d factor = _mm256_sub_pd(one, _mm256_mul_pd(a, a));
        _mm256_storeu_pd(grad + i,
                         _mm256_mul_pd(_mm256_loadu_pd(grad + i), factor));
    }
    for (; i < n; ++i) grad[i] *= 1.0 - activated[i] * activated[i];
}

void sigmoid_eval_avx2(std::size_t n, const double* x, double* y,
                       double clamp_eps) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d lo = _mm256_set1_pd(clamp_eps);
    const __m256d hi = _mm256_set1_pd(1.0 - clamp_eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        const __m256d e = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), v));
        const __m256d s = _mm256_div_pd(one, _mm256_add_pd(one, e));
        _mm256_storeu_pd(y + i, _mm256_max_pd(lo, _mm256_min_pd(hi, s)));
    }
    const double hi_s = 1.0 - clamp_eps;
    for (; i < n; ++i) {
        const double s = 1.0 / (1.0 + std::exp(-x[i]));
        y[i] = std::clamp(s, clamp_eps, hi_s);
    }
}

void sigmoid_backward_avx2(std::size_t n, const double* activated,
                           double* grad) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_loadu_pd(activated + i);
        const __m256d factor = _mm256_mul_pd(a, _mm256_sub_pd(one, a));
        _mm256_storeu_pd(grad + i,
                         _mm256_mul_pd(_mm256_loadu_pd(grad + i), factor));
    }
    for (; i < n; ++i) grad[i] *= activated[i] * (1.0 - activated[i]);
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{
        affine_forward_avx2, weight_grad_avx2,  bias_grad_avx2,
        input_grad_avx2,     axpy_avx2,         tanh_eval_avx2,
        tanh_backward_avx2,  sigmoid_eval_avx2, sigmoid_backward_avx2,
    };
    return table;
}

}  // namespace mustangs::kernels::detail
