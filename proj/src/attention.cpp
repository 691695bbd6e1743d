#include "edenet/attention.hpp"

#include <algorithm>
#include <cmath>

#include "edenet/errors.hpp"

namespace edenet {

DaaParams::DaaParams(int n_dirs_, int r_, Rng& rng) : n_dirs(n_dirs_), r(r_) {
    if (n_dirs < 1) throw ConfigError("DaaParams: n_dirs must be >= 1");
    if (r < 1) throw ConfigError("DaaParams: r must be >= 1");
    const int b = bottleneck();
    auto init = [&](int rows, int cols) {
        const double bound = 1.0 / std::sqrt((double)cols);
        std::vector<double> w((std::size_t)rows * cols);
        for (auto& v : w) v = rng.uniform(-bound, bound);
        return Tensor::make({rows, cols}, std::move(w), true);
    };
    F1 = init(b, n_dirs);
    F2 = init(n_dirs, b);
}

int DaaParams::bottleneck() const { return std::max(1, n_dirs / r); }

std::vector<TensorPtr> DaaParams::params() const { return {F1, F2}; }

TensorPtr squeeze(const TensorPtr& V) { return global_avg_pool(V); }

TensorPtr excite(const TensorPtr& d, const DaaParams& p) {
    if (d->rank() != 1 || d->dim(0) != p.n_dirs)
        throw DimensionError("excite: descriptor length must equal n_dirs");
    return sigmoid(linear(relu(linear(d, p.F1)), p.F2));
}

TensorPtr recalibrate(const TensorPtr& V, const TensorPtr& T) {
    if (V->rank() != 3) throw DimensionError("recalibrate: V must be [n, H, W]");
    if (T->rank() != 1 || T->dim(0) != V->dim(0))
        throw DimensionError("recalibrate: channel counts must match");
    const int n = V->dim(0);
    const int hw = V->dim(1) * V->dim(2);

    std::vector<double> out(V->data.size());
    for (int c = 0; c < n; ++c) {
        const double gain = 1.0 + T->data[(std::size_t)c];
        for (int i = 0; i < hw; ++i) {
            const std::size_t idx = (std::size_t)c * hw + i;
            out[idx] = gain * V->data[idx];
        }
    }

    auto result = make_op(V->shape, std::move(out), {V, T}, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        auto v_in = V;
        auto t_in = T;
        result->backward_fn = [self, v_in, t_in, n, hw]() {
            for (int c = 0; c < n; ++c) {
                const double gain = 1.0 + t_in->data[(std::size_t)c];
                double acc = 0.0;
                for (int i = 0; i < hw; ++i) {
                    const std::size_t idx = (std::size_t)c * hw + i;
                    const double g = self->grad[idx];
                    v_in->grad[idx] += g * gain;
                    acc += g * v_in->data[idx];
                }
                t_in->grad[(std::size_t)c] += acc;
            }
        };
    }
    return result;
}

TensorPtr daa_forward(const TensorPtr& V, const DaaParams& p) {
    return recalibrate(V, excite(squeeze(V), p));
}

}  // namespace edenet
