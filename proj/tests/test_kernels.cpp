#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mustangs/kernels.hpp"
#include "mustangs/rng.hpp"

using namespace mustangs;
namespace k = mustangs::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

struct BackendGuard {
    ~BackendGuard() { k::set_backend(k::Backend::Auto); }
};

// Shapes with deliberately awkward remainders for the 4/8-lane loops.
const std::size_t kSizes[] = {1, 2, 3, 5, 7, 8, 9, 16, 31, 32, 33, 64, 67};

}  // namespace

TEST_CASE("affine_forward matches a naive triple loop on both backends") {
    BackendGuard guard;
    Rng rng(42);
    for (const std::size_t in : {1u, 3u, 5u, 32u}) {
        for (const std::size_t out : {1u, 2u, 7u, 32u}) {
            const std::size_t batch = 4;
            const auto x = random_vec(rng, batch * in);
            const auto w = random_vec(rng, out * in);
            const auto bias = random_vec(rng, out);

            std::vector<double> expected(batch * out);
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t o = 0; o < out; ++o) {
                    double acc = bias[o];
                    for (std::size_t i = 0; i < in; ++i) {
                        acc += x[b * in + i] * w[o * in + i];
                    }
                    expected[b * out + o] = acc;
                }
            }

            for (const k::Backend backend : {k::Backend::Scalar, k::Backend::Avx2}) {
                if (backend == k::Backend::Avx2 && !k::avx2_available()) continue;
                k::set_backend(backend);
                std::vector<double> y(batch * out);
                k::affine_forward(x.data(), batch, in, w.data(), bias.data(),
                                  out, y.data());
                for (std::size_t i = 0; i < y.size(); ++i) {
                    CHECK(y[i] == doctest::Approx(expected[i]).epsilon(1e-13));
                }
            }
        }
    }
}

TEST_CASE("avx2 reduction kernels agree with scalar to tight tolerance") {
    if (!k::avx2_available()) {
        MESSAGE("avx2 not available; skipping equivalence checks");
        return;
    }
    BackendGuard guard;
    Rng rng(7);
    for (const std::size_t in : kSizes) {
        const std::size_t batch = 3;
        const std::size_t out = 5;
        const auto x = random_vec(rng, batch * in);
        const auto w = random_vec(rng, out * in);
        const auto bias = random_vec(rng, out);

        std::vector<double> y_scalar(batch * out), y_avx2(batch * out);
        k::set_backend(k::Backend::Scalar);
        k::affine_forward(x.data(), batch, in, w.data(), bias.data(), out,
                          y_scalar.data());
        k::set_backend(k::Backend::Avx2);
        k::affine_forward(x.data(), batch, in, w.data(), bias.data(), out,
                          y_avx2.data());
        for (std::size_t i = 0; i < y_scalar.size(); ++i) {
            const double denom =
                std::max({std::abs(y_scalar[i]), std::abs(y_avx2[i]), 1e-30});
            CHECK(std::abs(y_scalar[i] - y_avx2[i]) / denom < 1e-12);
        }
    }
}

TEST_CASE("avx2 elementwise kernels are bit-identical to scalar") {
    if (!k::avx2_available()) {
        MESSAGE("avx2 not available; skipping equivalence checks");
        return;
    }
    BackendGuard guard;
    Rng rng(1234);
    for (const std::size_t n : kSizes) {
        const auto x = random_vec(rng, n);
        const auto g0 = random_vec(rng, n);

        // axpy
        {
            auto y_s = random_vec(rng, n);
            auto y_a = y_s;
            k::set_backend(k::Backend::Scalar);
            k::axpy(n, -0.37, x.data(), y_s.data());
            k::set_backend(k::Backend::Avx2);
            k::axpy(n, -0.37, x.data(), y_a.data());
            CHECK(y_s == y_a);
        }
        // tanh_backward / sigmoid_backward on activations in (-1,1)/(0,1)
        {
            std::vector<double> act(n);
            for (std::size_t i = 0; i < n; ++i) act[i] = std::tanh(x[i]);
            auto g_s = g0;
            auto g_a = g0;
            k::set_backend(k::Backend::Scalar);
            k::tanh_backward(n, act.data(), g_s.data());
            k::set_backend(k::Backend::Avx2);
            k::tanh_backward(n, act.data(), g_a.data());
            CHECK(g_s == g_a);

            std::vector<double> sig(n);
            k::sigmoid_eval(n, x.data(), sig.data(), 1e-7);
            g_s = g0;
            g_a = g0;
            k::set_backend(k::Backend::Scalar);
            k::sigmoid_backward(n, sig.data(), g_s.data());
            k::set_backend(k::Backend::Avx2);
            k::sigmoid_backward(n, sig.data(), g_a.data());
            CHECK(g_s == g_a);
        }
    }
}

TEST_CASE("avx2 gradient kernels are bit-identical to scalar") {
    if (!k::avx2_available()) {
        MESSAGE("avx2 not available; skipping equivalence checks");
        return;
    }
    BackendGuard guard;
    Rng rng(99);
    for (const std::size_t in : {1u, 4u, 9u, 32u, 33u}) {
        const std::size_t batch = 6;
        const std::size_t out = 5;
        const auto delta = random_vec(rng, batch * out);
        const auto x = random_vec(rng, batch * in);
        const auto w = random_vec(rng, out * in);

        std::vector<double> dw_s(out * in), dw_a(out * in);
        std::vector<double> db_s(out), db_a(out);
        std::vector<double> dx_s(batch * in), dx_a(batch * in);

        k::set_backend(k::Backend::Scalar);
        k::weight_grad(delta.data(), x.data(), batch, in, out, dw_s.data());
        k::bias_grad(delta.data(), batch, out, db_s.data());
        k::input_grad(delta.data(), w.data(), batch, in, out, dx_s.data());

        k::set_backend(k::Backend::Avx2);
        k::weight_grad(delta.data(), x.data(), batch, in, out, dw_a.data());
        k::bias_grad(delta.data(), batch, out, db_a.data());
        k::input_grad(delta.data(), w.data(), batch, in, out, dx_a.data());

        CHECK(dw_s == dw_a);
        CHECK(db_s == db_a);
        CHECK(dx_s == dx_a);
    }
}

TEST_CASE("avx2 tanh/sigmoid evaluation agrees with libm to a few ulp") {
    if (!k::avx2_available()) {
        MESSAGE("avx2 not available; skipping equivalence checks");
        return;
    }
    BackendGuard guard;
    Rng rng(55);
    std::vector<double> x;
    for (int i = 0; i < 20000; ++i) x.push_back(8.0 * rng.normal());
    for (double edge : {-40.0, -19.0, -1e-12, 0.0, 1e-12, 19.0, 40.0, 700.0}) {
        x.push_back(edge);
    }
    const std::size_t n = x.size();
    std::vector<double> t_scalar(n), t_avx2(n), s_scalar(n), s_avx2(n);

    k::set_backend(k::Backend::Scalar);
    k::tanh_eval(n, x.data(), t_scalar.data());
    k::sigmoid_eval(n, x.data(), s_scalar.data(), 1e-7);
    k::set_backend(k::Backend::Avx2);
    k::tanh_eval(n, x.data(), t_avx2.data());
    k::sigmoid_eval(n, x.data(), s_avx2.data(), 1e-7);

    double max_tanh_err = 0.0;
    double max_sig_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        max_tanh_err = std::max(
            max_tanh_err, std::abs(t_scalar[i] - t_avx2[i]) /
                              std::max(std::abs(t_scalar[i]), 1e-300));
        max_sig_err = std::max(
            max_sig_err, std::abs(s_scalar[i] - s_avx2[i]) /
                             std::max(std::abs(s_scalar[i]), 1e-300));
    }
    CHECK(max_tanh_err < 1e-14);
    CHECK(max_sig_err < 1e-14);
}

TEST_CASE("sigmoid_eval clamps away from 0 and 1") {
    BackendGuard guard;
    const double x[] = {-1000.0, -40.0, 0.0, 40.0, 1000.0};
    double y[5];
    k::sigmoid_eval(5, x, y, 1e-7);
    for (double v : y) {
        CHECK(v >= 1e-7);
        CHECK(v <= 1.0 - 1e-7);
    }
    CHECK(y[2] == doctest::Approx(0.5));
}

TEST_CASE("backend forcing reports the active table") {
    BackendGuard guard;
    k::set_backend(k::Backend::Scalar);
    CHECK(k::resolved_backend() == k::Backend::Scalar);
    if (k::avx2_available()) {
        k::set_backend(k::Backend::Avx2);
        CHECK(k::resolved_backend() == k::Backend::Avx2);
    }
}
