#include "edenet/gabor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>

#include "edenet/errors.hpp"

namespace edenet {

double softplus_value(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
    if (y <= 0.0) throw DomainError("softplus_inverse: argument must be positive");
    if (y > 30.0) return y;
    return std::log(std::expm1(y));
}

GaborBank::GaborBank(int K_, int n_dirs_) : K(K_), n_dirs(n_dirs_) {
    if (K < 1 || K % 2 == 0) throw ConfigError("GaborBank: K must be odd and positive");
    if (n_dirs < 1) throw ConfigError("GaborBank: n_dirs must be >= 1");
    lambda_raw = Tensor::scalar(softplus_inverse(K / 2.0), true);
    gamma_raw = Tensor::scalar(softplus_inverse(0.5), true);
    phi = Tensor::scalar(0.0, true);
    sigma_raw = Tensor::scalar(softplus_inverse(K / 4.0), true);
}

double GaborBank::theta(int dir_index) const {
    if (dir_index < 1 || dir_index > n_dirs)
        throw DomainError("GaborBank: dir_index out of [1, n_dirs]");
    return dir_index * M_PI / n_dirs;
}

double GaborBank::lambda() const { return softplus_value(lambda_raw->data[0]); }
double GaborBank::gamma() const { return softplus_value(gamma_raw->data[0]); }
double GaborBank::sigma() const { return softplus_value(sigma_raw->data[0]); }

void GaborBank::set_shape(double lambda, double gamma, double phi_value, double sigma) {
    if (lambda <= 0 || gamma <= 0 || sigma <= 0)
        throw DomainError("GaborBank: lambda, gamma, sigma must be positive");
    lambda_raw->data[0] = softplus_inverse(lambda);
    gamma_raw->data[0] = softplus_inverse(gamma);
    phi->data[0] = phi_value;
    sigma_raw->data[0] = softplus_inverse(sigma);
}

std::vector<TensorPtr> GaborBank::params() const {
    return {lambda_raw, gamma_raw, phi, sigma_raw};
}

std::vector<double> gabor_kernel_values(int K, double theta, double lambda, double gamma,
                                        double phi, double sigma) {
    if (lambda <= 0 || gamma <= 0 || sigma <= 0)
        throw DomainError("gabor_kernel: lambda, gamma, sigma must be positive");
    std::vector<double> out((std::size_t)K * K);
    const double h = (K - 1) / 2.0;
    const double ct = std::cos(theta), st = std::sin(theta);
    for (int r = 0; r < K; ++r) {
        for (int c = 0; c < K; ++c) {
            const double i = r - h, j = c - h;
            const double ip = i * ct + j * st;
            const double jp = -i * st + j * ct;
            const double env =
                std::exp(-(ip * ip * gamma * gamma + jp * jp) / (2.0 * sigma * sigma));
            out[(std::size_t)r * K + c] = -env * std::cos(2.0 * M_PI * ip / lambda + phi);
        }
    }
    return out;
}

TensorPtr gabor_kernel(const GaborBank& bank, int dir_index) {
    const double theta = bank.theta(dir_index);
    const int K = bank.K;
    const double lam = bank.lambda(), gam = bank.gamma(), sig = bank.sigma();
    const double phi_v = bank.phi->data[0];
    auto values = gabor_kernel_values(K, theta, lam, gam, phi_v, sig);

    auto lraw = bank.lambda_raw;
    auto graw = bank.gamma_raw;
    auto praw = bank.phi;
    auto sraw = bank.sigma_raw;

    auto out = make_op(
        {K, K}, std::move(values), {lraw, graw, praw, sraw}, nullptr);
    if (!out->parents.empty()) {
        Tensor* self = out.get();
        out->backward_fn = [self, lraw, graw, praw, sraw, K, theta]() {
            const double lam = softplus_value(lraw->data[0]);
            const double gam = softplus_value(graw->data[0]);
            const double sig = softplus_value(sraw->data[0]);
            const double phi_v = praw->data[0];
            auto dsp = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
            const double dl = dsp(lraw->data[0]);
            const double dg = dsp(graw->data[0]);
            const double ds = dsp(sraw->data[0]);

            const double h = (K - 1) / 2.0;
            const double ct = std::cos(theta), st = std::sin(theta);
            double acc_l = 0, acc_g = 0, acc_p = 0, acc_s = 0;
            for (int r = 0; r < K; ++r) {
                for (int c = 0; c < K; ++c) {
                    const double go = self->grad[(std::size_t)r * K + c];
                    if (go == 0.0) continue;
                    const double i = r - h, j = c - h;
                    const double ip = i * ct + j * st;
                    const double jp = -i * st + j * ct;
                    const double q = ip * ip * gam * gam + jp * jp;
                    const double env = std::exp(-q / (2.0 * sig * sig));
                    const double a = 2.0 * M_PI * ip / lam + phi_v;
                    const double ca = std::cos(a), sa = std::sin(a);
                    acc_l += go * (-env * sa * 2.0 * M_PI * ip / (lam * lam));
                    acc_g += go * (env * ca * ip * ip * gam / (sig * sig));
                    acc_p += go * (env * sa);
                    acc_s += go * (-env * ca * q / (sig * sig * sig));
                }
            }
            lraw->grad[0] += acc_l * dl;
            graw->grad[0] += acc_g * dg;
            praw->grad[0] += acc_p;
            sraw->grad[0] += acc_s * ds;
        };
    }
    return out;
}

TensorPtr zero_dc(const TensorPtr& kernel) {
    const int n = kernel->numel();
    double mean = 0.0;
    for (double v : kernel->data) mean += v;
    mean /= n;
    std::vector<double> values(kernel->data);
    for (auto& v : values) v -= mean;

    auto out = make_op(kernel->shape, std::move(values), {kernel}, nullptr);
    if (!out->parents.empty()) {
        Tensor* self = out.get();
        auto in = kernel;
        out->backward_fn = [self, in, n]() {
            double gmean = 0.0;
            for (double g : self->grad) gmean += g;
            gmean /= n;
            for (int i = 0; i < n; ++i)
                in->grad[(std::size_t)i] += self->grad[(std::size_t)i] - gmean;
        };
    }
    return out;
}

TensorPtr lgf_forward(const TensorPtr& X, const std::vector<GaborBank>& banks, int k) {
    if (X->rank() != 3) throw DimensionError("lgf_forward: input must be [C, H, W]");
    const int c_in = X->dim(0);
    if ((int)banks.size() != c_in)
        throw DimensionError("lgf_forward: need one bank per input channel");
    const int K = banks[0].K;
    for (const auto& b : banks) {
        if (b.K != K || b.n_dirs != k)
            throw DimensionError("lgf_forward: banks must share K and have n_dirs == k");
    }
    // Inference rebuilds the same kernels for every window of a sequence, so
    // the assembled value tensor is cached on the raw parameters. Gradient
    // mode needs the synthesis graph and always rebuilds.
    static std::mutex cache_mutex;
    static std::map<std::vector<double>, TensorPtr> cache;
    std::vector<double> key;
    if (!grad_enabled()) {
        key.reserve((std::size_t)(4 * c_in + 2));
        key.push_back((double)K);
        key.push_back((double)k);
        for (const auto& b : banks) {
            key.push_back(b.lambda_raw->data[0]);
            key.push_back(b.gamma_raw->data[0]);
            key.push_back(b.phi->data[0]);
            key.push_back(b.sigma_raw->data[0]);
        }
        std::lock_guard<std::mutex> lock(cache_mutex);
        if (auto it = cache.find(key); it != cache.end())
            return conv2d(X, it->second, 1, (K - 1) / 2);
    }

    std::vector<TensorPtr> pieces;
    pieces.reserve((std::size_t)k * c_in);
    for (int n = 1; n <= k; ++n)
        for (int c = 0; c < c_in; ++c)
            pieces.push_back(reshape(zero_dc(gabor_kernel(banks[(std::size_t)c], n)), {K * K}));
    auto kernels = reshape(concat(pieces), {k, c_in, K, K});
    if (!grad_enabled()) {
        std::lock_guard<std::mutex> lock(cache_mutex);
        if (cache.size() >= 32) cache.clear();
        cache.emplace(std::move(key), kernels);
    }
    return conv2d(X, kernels, 1, (K - 1) / 2);
}

void write_kernel_grid_pgm(const std::vector<GaborBank>& banks, const std::string& path) {
    if (banks.empty()) throw DimensionError("write_kernel_grid_pgm: no banks");
    const int K = banks[0].K;
    const int k = banks[0].n_dirs;
    const int pad = 1;
    const int width = k * (K + pad) + pad;
    const int height = (int)banks.size() * (K + pad) + pad;
    std::vector<std::uint8_t> img((std::size_t)width * height, 0);

    for (std::size_t b = 0; b < banks.size(); ++b) {
        for (int n = 1; n <= k; ++n) {
            NoGradGuard ng;
            auto ker = zero_dc(gabor_kernel(banks[b], n));
            double lo = ker->data[0], hi = ker->data[0];
            for (double v : ker->data) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            const double span = hi - lo > 1e-12 ? hi - lo : 1.0;
            const int y0 = (int)b * (K + pad) + pad;
            const int x0 = (n - 1) * (K + pad) + pad;
            for (int r = 0; r < K; ++r)
                for (int c = 0; c < K; ++c) {
                    const double v = (ker->data[(std::size_t)r * K + c] - lo) / span;
                    img[(std::size_t)(y0 + r) * width + (x0 + c)] =
                        (std::uint8_t)std::lround(v * 255.0);
                }
        }
    }

    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw IoError("cannot open " + path + " for writing");
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data()), (std::streamsize)img.size());
    if (!out.good()) throw IoError("write failed: " + path);
}

}  // namespace edenet
