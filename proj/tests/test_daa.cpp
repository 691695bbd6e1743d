#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "edenet/attention.hpp"
#include "edenet/errors.hpp"
#include "edenet/grad_check.hpp"
#include "edenet/rng.hpp"
#include "edenet/tensor.hpp"
#include "oracles.hpp"

using namespace edenet;

namespace {

TensorPtr random_tensor(std::vector<int> shape, Rng& rng, bool rg = false) {
    long long n = 1;
    for (int d : shape) n *= d;
    std::vector<double> data((std::size_t)n);
    for (auto& v : data) v = rng.uniform(-1.0, 1.0);
    return Tensor::make(std::move(shape), std::move(data), rg);
}

double channel_norm(const TensorPtr& t, int n) {
    const int hw = t->dim(1) * t->dim(2);
    double acc = 0.0;
    for (int i = 0; i < hw; ++i) {
        const double v = t->data[(std::size_t)n * hw + i];
        acc += v * v;
    }
    return std::sqrt(acc);
}

}  // namespace

TEST_CASE("DaaParams shapes and bottleneck clamp") {
    Rng rng(71);
    DaaParams p(16, 4, rng);
    CHECK(p.F1->shape == std::vector<int>{4, 16});
    CHECK(p.F2->shape == std::vector<int>{16, 4});

    DaaParams clamped(4, 16, rng);
    CHECK(clamped.bottleneck() == 1);
    CHECK(clamped.F1->shape == std::vector<int>{1, 4});
    CHECK(clamped.F2->shape == std::vector<int>{4, 1});

    CHECK_THROWS_AS(DaaParams(0, 4, rng), ConfigError);
    CHECK_THROWS_AS(DaaParams(8, 0, rng), ConfigError);

    // uniform fan-in init stays inside +-1/sqrt(fan_in)
    for (double v : p.F1->data) CHECK(std::fabs(v) <= 1.0 / 4.0);
    for (double v : p.F2->data) CHECK(std::fabs(v) <= 0.5);
}

TEST_CASE("squeeze") {
    SUBCASE("constant channels give their constants") {
        auto V = Tensor::zeros({3, 4, 4});
        for (int n = 0; n < 3; ++n)
            for (int i = 0; i < 16; ++i) V->data[(std::size_t)n * 16 + i] = 1.5 * n;
        auto d = squeeze(V);
        CHECK(d->shape == std::vector<int>{3});
        for (int n = 0; n < 3; ++n) CHECK(d->data[(std::size_t)n] == doctest::Approx(1.5 * n));
    }
    SUBCASE("zeros squeeze to zeros") {
        auto d = squeeze(Tensor::zeros({5, 3, 3}));
        for (double v : d->data) CHECK(v == 0.0);
    }
    SUBCASE("random matches the per-channel mean oracle") {
        Rng rng(73);
        auto V = random_tensor({8, 4, 4}, rng);
        auto d = squeeze(V);
        auto want = oracle::global_avg_pool(V->data, 8, 4, 4);
        CHECK(oracle::max_rel_diff(d->data, want) < 1e-6);
    }
}

TEST_CASE("excite") {
    Rng rng(79);
    SUBCASE("zero weights give T = 0.5 everywhere") {
        DaaParams p(8, 2, rng);
        std::fill(p.F1->data.begin(), p.F1->data.end(), 0.0);
        auto d = random_tensor({8}, rng);
        auto T = excite(d, p);
        for (double v : T->data) CHECK(v == doctest::Approx(0.5));
    }
    SUBCASE("zero descriptor gives T = 0.5 everywhere") {
        DaaParams p(8, 2, rng);
        auto T = excite(Tensor::zeros({8}), p);
        for (double v : T->data) CHECK(v == doctest::Approx(0.5));
    }
    SUBCASE("outputs stay in (0,1) and match the composed oracle") {
        for (int trial = 0; trial < 20; ++trial) {
            DaaParams p(16, 4, rng);
            auto d = random_tensor({16}, rng);
            auto T = excite(d, p);
            for (double v : T->data) {
                CHECK(v > 0.0);
                CHECK(v < 1.0);
            }
            auto hid = oracle::linear(d->data, p.F1->data, 4, 16);
            for (auto& v : hid) v = std::max(v, 0.0);
            auto want = oracle::linear(hid, p.F2->data, 16, 4);
            for (auto& v : want) v = 1.0 / (1.0 + std::exp(-v));
            CHECK(oracle::max_rel_diff(T->data, want) < 1e-6);
        }
    }
    SUBCASE("dimension mismatch rejected") {
        DaaParams p(8, 2, rng);
        CHECK_THROWS_AS(excite(Tensor::zeros({7}), p), DimensionError);
    }
}

TEST_CASE("recalibrate") {
    Rng rng(83);
    SUBCASE("T = 0.5 scales by 1.5") {
        auto V = random_tensor({4, 3, 3}, rng);
        auto T = Tensor::full({4}, 0.5);
        auto out = recalibrate(V, T);
        for (std::size_t i = 0; i < V->data.size(); ++i)
            CHECK(out->data[i] == doctest::Approx(1.5 * V->data[i]));
    }
    SUBCASE("zero input stays zero") {
        auto out = recalibrate(Tensor::zeros({4, 3, 3}), Tensor::full({4}, 0.9));
        for (double v : out->data) CHECK(v == 0.0);
    }
    SUBCASE("elementwise oracle") {
        auto V = random_tensor({6, 5, 4}, rng);
        auto T = random_tensor({6}, rng);
        auto out = recalibrate(V, T);
        for (int n = 0; n < 6; ++n)
            for (int i = 0; i < 20; ++i) {
                const std::size_t idx = (std::size_t)n * 20 + i;
                CHECK(out->data[idx] ==
                      doctest::Approx((1.0 + T->data[(std::size_t)n]) * V->data[idx]));
            }
    }
    SUBCASE("channel mismatch rejected") {
        CHECK_THROWS_AS(recalibrate(Tensor::zeros({4, 3, 3}), Tensor::zeros({5})),
                        DimensionError);
    }
}

TEST_CASE("boundedness: recalibrated channel norms stay within [1,2]x") {
    Rng rng(89);
    for (int trial = 0; trial < 20; ++trial) {
        DaaParams p(8, 2, rng);
        auto V = random_tensor({8, 6, 6}, rng);
        auto out = daa_forward(V, p);
        for (int n = 0; n < 8; ++n) {
            const double base = channel_norm(V, n);
            const double got = channel_norm(out, n);
            CHECK(got >= base - 1e-9);
            CHECK(got <= 2.0 * base + 1e-9);
        }
    }
}

TEST_CASE("full composite matches the scalar-loop oracle on 20 random stacks") {
    Rng rng(97);
    for (int trial = 0; trial < 20; ++trial) {
        DaaParams p(8, 2, rng);
        auto V = random_tensor({8, 6, 6}, rng);
        auto out = daa_forward(V, p);
        auto want = oracle::daa_composite(V->data, 8, 6, 6, p.F1->data, p.bottleneck(),
                                          p.F2->data);
        CHECK(oracle::max_rel_diff(out->data, want) < 1e-6);
    }
}

TEST_CASE("gradients flow through squeeze, excite, recalibrate") {
    Rng rng(101);
    DaaParams p(6, 2, rng);
    auto V = random_tensor({6, 4, 4}, rng, true);
    auto f = [&]() {
        auto out = daa_forward(V, p);
        return sum_all(mul(out, out));
    };
    auto report = grad_check_detailed(f, {"V", "F1", "F2"}, {V, p.F1, p.F2}, 1e-3);
    for (double e : report.max_rel_error) CHECK(e < 1e-3);
}

TEST_CASE("residual path: saturated-off gating still passes the channel at unit gain") {
    Rng rng(103);
    auto V = random_tensor({4, 3, 3}, rng);
    auto out = recalibrate(V, Tensor::zeros({4}));
    CHECK(oracle::max_abs_diff(out->data, V->data) == 0.0);
}

TEST_CASE("input gradients are nonzero wherever downstream gradient is nonzero") {
    Rng rng(107);
    for (int trial = 0; trial < 5; ++trial) {
        DaaParams p(4, 2, rng);
        auto V = random_tensor({4, 3, 3}, rng, true);
        sum_all(daa_forward(V, p))->backward();
        for (double g : V->grad) CHECK(std::fabs(g) > 1e-9);
    }
}
