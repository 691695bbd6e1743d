#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "edenet/errors.hpp"
#include "edenet/gabor.hpp"
#include "edenet/grad_check.hpp"
#include "edenet/rng.hpp"
#include "edenet/tensor.hpp"
#include "oracles.hpp"

using namespace edenet;

TEST_CASE("bank construction and theta grid") {
    GaborBank bank(9, 8);
    CHECK(bank.K == 9);
    CHECK(bank.n_dirs == 8);
    for (int d = 1; d <= 8; ++d) CHECK(bank.theta(d) == doctest::Approx(d * M_PI / 8.0));
    CHECK(bank.lambda() == doctest::Approx(4.5).epsilon(1e-9));
    CHECK(bank.gamma() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(bank.phi->data[0] == 0.0);
    CHECK(bank.sigma() == doctest::Approx(2.25).epsilon(1e-9));

    CHECK_THROWS_AS(GaborBank(8, 4), ConfigError);  // even K
    CHECK_THROWS_AS(GaborBank(5, 0), ConfigError);
}

TEST_CASE("center value is -1 at phi=0") {
    for (int K : {5, 9, 13}) {
        GaborBank bank(K, 6);
        const int p = (K - 1) / 2;
        for (int d = 1; d <= 6; ++d) {
            auto ker = gabor_kernel(bank, d);
            CHECK(ker->shape == std::vector<int>{K, K});
            CHECK(ker->data[(std::size_t)p * K + p] == doctest::Approx(-1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("kernel values match the closed form") {
    GaborBank bank(7, 4);
    bank.set_shape(3.0, 0.8, 0.4, 1.7);
    const double theta = bank.theta(2);
    auto ker = gabor_kernel(bank, 2);
    const int K = 7, h = 3;
    for (int r = 0; r < K; ++r) {
        for (int c = 0; c < K; ++c) {
            const double i = r - h, j = c - h;
            const double ip = i * std::cos(theta) + j * std::sin(theta);
            const double jp = -i * std::sin(theta) + j * std::cos(theta);
            const double g =
                std::exp(-(ip * ip * 0.8 * 0.8 + jp * jp) / (2.0 * 1.7 * 1.7));
            const double want = -g * std::cos(2.0 * M_PI * ip / 3.0 + 0.4);
            CHECK(ker->data[(std::size_t)r * K + c] == doctest::Approx(want).epsilon(1e-9));
        }
    }
}

TEST_CASE("gaussian limit at lambda=1e6, phi=0, gamma=1") {
    const int K = 11;
    GaborBank bank(K, 4);
    bank.set_shape(1e6, 1.0, 0.0, K / 4.0);
    for (int d = 1; d <= 4; ++d) {
        auto ker = gabor_kernel(bank, d);
        double sup = 0.0;
        const int h = (K - 1) / 2;
        for (int r = 0; r < K; ++r) {
            for (int c = 0; c < K; ++c) {
                const double u = r - h, v = c - h;
                const double gauss =
                    -std::exp(-(u * u + v * v) / (2.0 * (K / 4.0) * (K / 4.0)));
                sup = std::max(sup, std::fabs(ker->data[(std::size_t)r * K + c] - gauss));
            }
        }
        CHECK(sup < 1e-6);
    }
}

TEST_CASE("edge limit: small gamma collapses support to the theta line") {
    const int K = 11;
    GaborBank bank(K, 4);
    // sigma sets the line thickness; keep it below one pixel
    bank.set_shape(1e6, 0.05, 0.0, 0.5);
    const int h = (K - 1) / 2;
    for (int d = 1; d <= 4; ++d) {
        const double theta = bank.theta(d);
        auto ker = gabor_kernel(bank, d);
        double on_line = 0.0, total = 0.0;
        for (int r = 0; r < K; ++r) {
            for (int c = 0; c < K; ++c) {
                const double i = r - h, j = c - h;
                const double jp = -i * std::sin(theta) + j * std::cos(theta);
                const double m = std::fabs(ker->data[(std::size_t)r * K + c]);
                total += m;
                if (std::fabs(jp) <= 1.0) on_line += m;
            }
        }
        CHECK(on_line / total > 0.9);
    }
}

TEST_CASE("90 degree rotation relates orthogonal directions when gamma=1") {
    const int K = 9;
    GaborBank bank(K, 4);  // theta_1 = pi/4, theta_3 = 3pi/4 = theta_1 + pi/2
    bank.set_shape(3.5, 1.0, 0.7, 2.0);
    auto k1 = gabor_kernel(bank, 1);
    auto k3 = gabor_kernel(bank, 3);
    for (int r = 0; r < K; ++r)
        for (int c = 0; c < K; ++c)
            CHECK(k3->data[(std::size_t)r * K + c] ==
                  doctest::Approx(k1->data[(std::size_t)c * K + (K - 1 - r)]).epsilon(1e-9));
}

TEST_CASE("zero_dc") {
    SUBCASE("constant kernel maps to zero") {
        auto out = zero_dc(Tensor::full({5, 5}, 3.7));
        for (double v : out->data) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("zero-mean kernel unchanged") {
        auto in = Tensor::make({2, 2}, {1.0, -1.0, 2.0, -2.0});
        auto out = zero_dc(in);
        CHECK(oracle::max_abs_diff(out->data, in->data) < 1e-15);
    }
    SUBCASE("random kernel sums to ~0") {
        Rng rng(51);
        std::vector<double> v(25);
        for (auto& x : v) x = rng.uniform(-2.0, 2.0);
        auto out = zero_dc(Tensor::make({5, 5}, std::move(v)));
        double s = 0.0;
        for (double x : out->data) s += x;
        CHECK(std::fabs(s) < 1e-9);
    }
    SUBCASE("gradient flows through the mean subtraction") {
        Rng rng(53);
        std::vector<double> v(9), w(9);
        for (auto& x : v) x = rng.uniform(-1.0, 1.0);
        for (auto& x : w) x = rng.uniform(-1.0, 1.0);
        auto in = Tensor::make({3, 3}, std::move(v), true);
        auto weights = Tensor::make({3, 3}, std::move(w));
        auto f = [&]() { return sum_all(mul(zero_dc(in), weights)); };
        CHECK(grad_check(f, {in}, 1e-4) < 1e-3);
    }
}

TEST_CASE("DC-removed kernels sum to zero for 100 random parameter draws") {
    Rng rng(57);
    const int K = 9;
    GaborBank bank(K, 6);
    for (int trial = 0; trial < 100; ++trial) {
        bank.set_shape(rng.uniform(1.0, K), rng.uniform(0.1, 2.0), rng.uniform(-M_PI, M_PI),
                       rng.uniform(0.5, K / 2.0));
        const int d = 1 + rng.uniform_int(6);
        auto f = zero_dc(gabor_kernel(bank, d));
        double s = 0.0;
        for (double x : f->data) s += x;
        CHECK(std::fabs(s) < 1e-6);
    }
}

TEST_CASE("lgf_forward") {
    const int K = 5, k = 4;

    SUBCASE("zero input gives zero output") {
        std::vector<GaborBank> banks{GaborBank(K, k)};
        auto V = lgf_forward(Tensor::zeros({1, 8, 8}), banks, k);
        CHECK(V->shape == std::vector<int>{k, 8, 8});
        for (double v : V->data) CHECK(v == 0.0);
    }

    SUBCASE("impulse recovers each DC-removed kernel") {
        std::vector<GaborBank> banks{GaborBank(K, k)};
        auto X = Tensor::zeros({1, 9, 9});
        X->data[(std::size_t)4 * 9 + 4] = 1.0;  // center impulse
        auto V = lgf_forward(X, banks, k);
        const int p = (K - 1) / 2;
        for (int n = 0; n < k; ++n) {
            auto F = zero_dc(gabor_kernel(banks[0], n + 1));
            for (int dy = -p; dy <= p; ++dy)
                for (int dx = -p; dx <= p; ++dx) {
                    const double got = V->data[((std::size_t)n * 9 + (4 + dy)) * 9 + (4 + dx)];
                    // cross-correlation: response at offset o reads kernel at p - o
                    const double want = F->data[(std::size_t)(p - dy) * K + (p - dx)];
                    CHECK(got == doctest::Approx(want).epsilon(1e-9));
                }
        }
    }

    SUBCASE("constant input rejected on interior pixels") {
        std::vector<GaborBank> banks{GaborBank(K, k)};
        auto V = lgf_forward(Tensor::full({1, 12, 12}, 2.5), banks, k);
        const int p = (K - 1) / 2;
        for (int n = 0; n < k; ++n)
            for (int y = p; y < 12 - p; ++y)
                for (int x = p; x < 12 - p; ++x)
                    CHECK(std::fabs(V->data[((std::size_t)n * 12 + y) * 12 + x]) < 1e-5);
    }

    SUBCASE("multi-channel responses sum over input channels") {
        Rng rng(61);
        std::vector<GaborBank> banks{GaborBank(K, k), GaborBank(K, k)};
        banks[0].set_shape(2.5, 0.7, 0.2, 1.3);
        banks[1].set_shape(4.0, 1.1, -0.5, 2.0);
        std::vector<double> x0(64), x1(64);
        for (auto& v : x0) v = rng.uniform(-1.0, 1.0);
        for (auto& v : x1) v = rng.uniform(-1.0, 1.0);
        std::vector<double> joint;
        joint.insert(joint.end(), x0.begin(), x0.end());
        joint.insert(joint.end(), x1.begin(), x1.end());

        auto V = lgf_forward(Tensor::make({2, 8, 8}, joint), banks, k);
        auto V0 = lgf_forward(Tensor::make({1, 8, 8}, x0), {banks[0]}, k);
        auto V1 = lgf_forward(Tensor::make({1, 8, 8}, x1), {banks[1]}, k);
        for (std::size_t i = 0; i < V->data.size(); ++i)
            CHECK(V->data[i] == doctest::Approx(V0->data[i] + V1->data[i]).epsilon(1e-9));
    }

    SUBCASE("bank list must match input channels") {
        std::vector<GaborBank> banks{GaborBank(K, k)};
        CHECK_THROWS_AS(lgf_forward(Tensor::zeros({2, 8, 8}), banks, k), DimensionError);
        CHECK_THROWS_AS(lgf_forward(Tensor::zeros({1, 8, 8}), banks, k + 1), DimensionError);
    }
}

TEST_CASE("gabor parameter gradients pass grad_check") {
    Rng rng(63);
    GaborBank bank(5, 4);
    std::vector<double> xv(49);
    for (auto& v : xv) v = rng.uniform(-1.0, 1.0);
    auto X = Tensor::make({1, 7, 7}, std::move(xv));
    std::vector<GaborBank> banks{bank};
    auto f = [&]() {
        auto V = lgf_forward(X, banks, 4);
        return sum_all(mul(V, V));
    };
    auto report = grad_check_detailed(
        f, {"lambda", "gamma", "phi", "sigma"},
        {bank.lambda_raw, bank.gamma_raw, bank.phi, bank.sigma_raw}, 1e-3);
    for (std::size_t i = 0; i < report.names.size(); ++i)
        CHECK(report.max_rel_error[i] < 1e-3);
}

TEST_CASE("flank direction argmax tracks local orientation") {
    // smooth single-hyperbola ridge, no wavelet carrier
    const int D = 48, S = 48;
    const double v = 0.2998 / 3.0, d0 = 0.5, dx = 0.05, tb = 0.8;
    auto bin_of = [&](int s) {
        const double x = (s - S / 2) * dx;
        return (2.0 / v) * std::sqrt(d0 * d0 + x * x) / tb;
    };
    std::vector<double> img((std::size_t)D * S, 0.0);
    for (int s = 0; s < S; ++s)
        for (int d = 0; d < D; ++d)
            img[(std::size_t)d * S + s] = std::exp(-std::pow(d - bin_of(s), 2) / (2.0 * 1.5 * 1.5));

    const int k = 8, K = 9;
    GaborBank bank(K, k);
    bank.set_shape(6.0, 1.0, 0.0, 2.0);
    auto V = lgf_forward(Tensor::make({1, D, S}, img), {bank}, k);

    auto at = [&](int d, int s) { return img[(std::size_t)d * S + s]; };
    int checked = 0;
    for (int s : {8, 12, 36, 40}) {  // far flank columns, both sides
        const int d = (int)std::lround(bin_of(s));  // on the crest, where response peaks
        if (d + 3 >= D) continue;
        // gradient orientation measured just off the crest, where it is clean
        const double gi = (at(d + 3, s) - at(d + 1, s)) / 2.0;
        const double gj = (at(d + 2, s + 1) - at(d + 2, s - 1)) / 2.0;
        double beta = std::atan2(gj, gi);
        if (beta < 0) beta += M_PI;  // orientation mod pi

        int best = 0;
        double best_mag = -1.0;
        for (int n = 0; n < k; ++n) {
            const double m = std::fabs(V->data[((std::size_t)n * D + d) * S + s]);
            if (m > best_mag) {
                best_mag = m;
                best = n;
            }
        }
        double theta_star = std::fmod(bank.theta(best + 1), M_PI);
        double diff = std::fabs(theta_star - beta);
        diff = std::min(diff, M_PI - diff);
        CHECK(diff <= M_PI / k + 1e-9);
        ++checked;
    }
    CHECK(checked == 4);
}

TEST_CASE("kernel grid exports as a PGM") {
    std::vector<GaborBank> banks{GaborBank(7, 4), GaborBank(7, 4)};
    const auto path = std::filesystem::temp_directory_path() / "edenet_kernels_test.pgm";
    write_kernel_grid_pgm(banks, path.string());
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::string magic;
    in >> magic;
    CHECK(magic == "P5");
    int w = 0, h = 0, maxv = 0;
    in >> w >> h >> maxv;
    CHECK(maxv == 255);
    CHECK(w >= 4 * 7);
    CHECK(h >= 2 * 7);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(write_kernel_grid_pgm(banks, "/nonexistent_dir_zz/k.pgm"), IoError);
}

TEST_CASE("domain errors on invalid shape parameters") {
    GaborBank bank(5, 4);
    CHECK_THROWS_AS(bank.set_shape(-1.0, 0.5, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(bank.set_shape(2.0, 0.0, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(bank.set_shape(2.0, 0.5, 0.0, -2.0), DomainError);
    CHECK_THROWS_AS(gabor_kernel(bank, 0), DomainError);
    CHECK_THROWS_AS(gabor_kernel(bank, 5), DomainError);
    CHECK_THROWS_AS(gabor_kernel_values(5, 0.0, -1.0, 1.0, 0.0, 1.0), DomainError);
}
