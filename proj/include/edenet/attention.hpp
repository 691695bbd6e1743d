#pragma once

#include <vector>

#include "edenet/rng.hpp"
#include "edenet/tensor.hpp"

namespace edenet {

// Direction-aware attention: squeeze the directional stack to a descriptor,
// gate it through a two-layer bottleneck, recalibrate with a residual.
struct DaaParams {
    int n_dirs = 8;
    int r = 16;
    TensorPtr F1;  // [bottleneck, n_dirs]
    TensorPtr F2;  // [n_dirs, bottleneck]

    DaaParams(int n_dirs, int r, Rng& rng);

    int bottleneck() const;
    std::vector<TensorPtr> params() const;
};

// d_n = spatial mean of channel n
TensorPtr squeeze(const TensorPtr& V);

// T = sigmoid(F2 . relu(F1 . d)), no biases
TensorPtr excite(const TensorPtr& d, const DaaParams& p);

// out_n = (1 + T_n) . V_n
TensorPtr recalibrate(const TensorPtr& V, const TensorPtr& T);

TensorPtr daa_forward(const TensorPtr& V, const DaaParams& p);

}  // namespace edenet
