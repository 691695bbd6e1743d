#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "edenet/attention.hpp"
#include "edenet/gabor.hpp"
#include "edenet/gpr_sim.hpp"
#include "edenet/rng.hpp"
#include "edenet/tensor.hpp"

namespace edenet {

struct EdeBlockConfig {
    int K = 11;            // odd Gabor kernel extent
    int k = 16;            // fixed directions
    int shift_channels = 8;
    int pool_window = 2;
    int pool_stride = 2;

    void validate() const;
};

struct NetConfig {
    std::vector<EdeBlockConfig> scales;
    int descriptor_dim = 400;
    int reduction = 16;
    int input_channels = 2;  // C
    int depth_bins = 128;    // D
    int window = 100;        // along-track frames per descriptor

    void validate() const;
    // full-scale default: scales {35, 11, 5}, k = 64, d = 400
    static NetConfig full_scale();
};

struct Descriptor {
    std::vector<double> values;  // unit L2 norm
    std::array<double, 2> pose{};
    int frame_id = 0;
};

// eta = W2 * pool(W1 * V + b1) + b2, both convs 3x3 same-padded
TensorPtr shift_invariant_unit(const TensorPtr& V, const TensorPtr& W1, const TensorPtr& b1,
                               const TensorPtr& W2, const TensorPtr& b2, int pool_window,
                               int pool_stride);

struct EdeBlock {
    EdeBlockConfig cfg;
    std::vector<GaborBank> banks;  // one per input channel
    DaaParams daa;
    TensorPtr W1, b1, W2, b2;

    EdeBlock(const EdeBlockConfig& cfg, int in_channels, int reduction, Rng& rng);

    TensorPtr forward(const TensorPtr& X) const;
    // flattened output length for a given input spatial size
    int out_numel(int H, int W) const;
};

// O = l2_normalize(relu(W . concat(etas) + b))
TensorPtr aggregate(const std::vector<TensorPtr>& etas, const TensorPtr& W, const TensorPtr& b,
                    L2NormMode mode);

class EdeNet {
public:
    NetConfig cfg;
    std::vector<EdeBlock> blocks;
    TensorPtr W_agg, b_agg;

    EdeNet(const NetConfig& cfg, std::uint64_t seed);

    // X: [C, D, window]
    TensorPtr forward_window(const TensorPtr& X, L2NormMode mode) const;

    // stride-1 sliding windows; descriptor pose is the window's center frame.
    // Runs without graph construction; window must equal cfg.window.
    std::vector<Descriptor> encode_sequence(const GprSequence& seq, int window) const;

    std::vector<std::pair<std::string, TensorPtr>> named_params() const;

    int concat_length() const;

    // clamp every parameter to its nearest f32 value so checkpoints round-trip
    void round_params_to_f32();
};

// Baseline: per-depth-bin mean absolute energy over the window, L2-normalized.
std::vector<Descriptor> encode_energy_profile(const GprSequence& seq, int window);

}  // namespace edenet
