#include "edenet/network.hpp"

#include <algorithm>
#include <cmath>

#include "edenet/errors.hpp"

namespace edenet {

void EdeBlockConfig::validate() const {
    if (K < 1 || K % 2 == 0) throw ConfigError("EdeBlockConfig: K must be odd and positive");
    if (k < 2) throw ConfigError("EdeBlockConfig: k must be >= 2");
    if (shift_channels < 1) throw ConfigError("EdeBlockConfig: shift_channels must be >= 1");
    if (pool_window < 1 || pool_stride < 1)
        throw ConfigError("EdeBlockConfig: pool window and stride must be >= 1");
}

void NetConfig::validate() const {
    if (scales.empty()) throw ConfigError("NetConfig: scales must be nonempty");
    for (const auto& s : scales) s.validate();
    if (descriptor_dim < 1) throw ConfigError("NetConfig: descriptor_dim must be >= 1");
    if (reduction < 1) throw ConfigError("NetConfig: reduction must be >= 1");
    if (input_channels < 1 || depth_bins < 1 || window < 1)
        throw ConfigError("NetConfig: input shape must be positive");
    for (const auto& s : scales) {
        if (depth_bins < s.K || window < s.K)
            throw ConfigError("NetConfig: input extents " + std::to_string(depth_bins) + "x" +
                              std::to_string(window) + " smaller than kernel K=" +
                              std::to_string(s.K));
        if (depth_bins < s.pool_window || window < s.pool_window)
            throw ConfigError("NetConfig: pool window does not fit the input extents");
    }
}

NetConfig NetConfig::full_scale() {
    NetConfig cfg;
    cfg.scales.clear();
    for (int K : {35, 11, 5}) {
        EdeBlockConfig b;
        b.K = K;
        b.k = 64;
        b.shift_channels = 8;
        b.pool_window = K == 35 ? 4 : 2;
        b.pool_stride = b.pool_window;
        cfg.scales.push_back(b);
    }
    cfg.descriptor_dim = 400;
    cfg.reduction = 16;
    cfg.input_channels = 2;
    cfg.depth_bins = 128;
    cfg.window = 100;
    return cfg;
}

TensorPtr shift_invariant_unit(const TensorPtr& V, const TensorPtr& W1, const TensorPtr& b1,
                               const TensorPtr& W2, const TensorPtr& b2, int pool_window,
                               int pool_stride) {
    auto h = conv2d(V, W1, 1, 1, b1);
    auto p = maxpool2d(h, pool_window, pool_stride);
    return conv2d(p, W2, 1, 1, b2);
}

namespace {

TensorPtr uniform_init(std::vector<int> shape, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt((double)fan_in);
    long long n = 1;
    for (int d : shape) n *= d;
    std::vector<double> data((std::size_t)n);
    for (auto& v : data) v = rng.uniform(-bound, bound);
    return Tensor::make(std::move(shape), std::move(data), true);
}

}  // namespace

EdeBlock::EdeBlock(const EdeBlockConfig& cfg_, int in_channels, int reduction, Rng& rng)
    : cfg(cfg_), daa(cfg_.k, reduction, rng) {
    cfg.validate();
    banks.reserve((std::size_t)in_channels);
    for (int c = 0; c < in_channels; ++c) banks.emplace_back(cfg.K, cfg.k);
    const int sc = cfg.shift_channels;
    W1 = uniform_init({sc, cfg.k, 3, 3}, cfg.k * 9, rng);
    b1 = uniform_init({sc}, cfg.k * 9, rng);
    W2 = uniform_init({sc, sc, 3, 3}, sc * 9, rng);
    b2 = uniform_init({sc}, sc * 9, rng);
}

TensorPtr EdeBlock::forward(const TensorPtr& X) const {
    if (X->rank() != 3) throw DimensionError("EdeBlock: input must be [C, H, W]");
    if (X->dim(1) < cfg.K || X->dim(2) < cfg.K)
        throw DimensionError("EdeBlock: spatial extents " + std::to_string(X->dim(1)) + "x" +
                             std::to_string(X->dim(2)) + " smaller than K=" +
                             std::to_string(cfg.K));
    auto V = lgf_forward(X, banks, cfg.k);
    auto recal = daa_forward(V, daa);
    return shift_invariant_unit(recal, W1, b1, W2, b2, cfg.pool_window, cfg.pool_stride);
}

int EdeBlock::out_numel(int H, int W) const {
    const int ph = (H - cfg.pool_window) / cfg.pool_stride + 1;
    const int pw = (W - cfg.pool_window) / cfg.pool_stride + 1;
    return cfg.shift_channels * ph * pw;
}

TensorPtr aggregate(const std::vector<TensorPtr>& etas, const TensorPtr& W, const TensorPtr& b,
                    L2NormMode mode) {
    if (etas.empty()) throw DimensionError("aggregate: no block outputs");
    std::vector<TensorPtr> flat;
    flat.reserve(etas.size());
    int total = 0;
    for (const auto& e : etas) {
        flat.push_back(reshape(e, {e->numel()}));
        total += e->numel();
    }
    if (W->rank() != 2 || W->dim(1) != total)
        throw DimensionError("aggregate: W expects length " + std::to_string(W->dim(1)) +
                             ", concatenated etas give " + std::to_string(total));
    auto joined = flat.size() == 1 ? flat[0] : concat(flat);
    return l2_normalize(relu(linear(joined, W, b)), mode);
}

EdeNet::EdeNet(const NetConfig& cfg_, std::uint64_t seed) : cfg(cfg_) {
    cfg.validate();
    Rng rng(seed);
    blocks.reserve(cfg.scales.size());
    for (const auto& sc : cfg.scales)
        blocks.emplace_back(sc, cfg.input_channels, cfg.reduction, rng);
    const int n_total = concat_length();
    W_agg = uniform_init({cfg.descriptor_dim, n_total}, n_total, rng);
    b_agg = uniform_init({cfg.descriptor_dim}, n_total, rng);
    round_params_to_f32();
}

int EdeNet::concat_length() const {
    int total = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        total += blocks[i].out_numel(cfg.depth_bins, cfg.window);
    return total;
}

TensorPtr EdeNet::forward_window(const TensorPtr& X, L2NormMode mode) const {
    if (X->rank() != 3 || X->dim(0) != cfg.input_channels || X->dim(1) != cfg.depth_bins ||
        X->dim(2) != cfg.window)
        throw DimensionError(
            "EdeNet: window shape [" + std::to_string(X->dim(0)) + "," +
            std::to_string(X->rank() > 1 ? X->dim(1) : 0) + "," +
            std::to_string(X->rank() > 2 ? X->dim(2) : 0) + "] does not match configured [" +
            std::to_string(cfg.input_channels) + "," + std::to_string(cfg.depth_bins) + "," +
            std::to_string(cfg.window) + "]");
    std::vector<TensorPtr> etas;
    etas.reserve(blocks.size());
    for (const auto& blk : blocks) etas.push_back(blk.forward(X));
    return aggregate(etas, W_agg, b_agg, mode);
}

std::vector<Descriptor> EdeNet::encode_sequence(const GprSequence& seq, int window) const {
    if (window < 1) throw UsageError("encode_sequence: window must be >= 1");
    if (window > seq.S)
        throw UsageError("encode_sequence: window " + std::to_string(window) +
                         " exceeds sequence length " + std::to_string(seq.S));
    if (window != cfg.window)
        throw DimensionError("encode_sequence: window " + std::to_string(window) +
                             " does not match configured window " + std::to_string(cfg.window));
    if (seq.C != cfg.input_channels || seq.D != cfg.depth_bins)
        throw DimensionError("encode_sequence: sequence is D=" + std::to_string(seq.D) + " C=" +
                             std::to_string(seq.C) + ", network expects D=" +
                             std::to_string(cfg.depth_bins) + " C=" +
                             std::to_string(cfg.input_channels));

    NoGradGuard ng;
    std::vector<Descriptor> out;
    out.reserve((std::size_t)(seq.S - window + 1));
    const int center = (window - 1) / 2;
    for (int start = 0; start + window <= seq.S; ++start) {
        std::vector<double> data((std::size_t)seq.C * seq.D * window);
        for (int c = 0; c < seq.C; ++c)
            for (int d = 0; d < seq.D; ++d)
                for (int w = 0; w < window; ++w)
                    data[((std::size_t)c * seq.D + d) * window + w] = seq.at(start + w, d, c);
        auto X = Tensor::make({seq.C, seq.D, window}, std::move(data));
        auto desc = forward_window(X, L2NormMode::Strict);
        Descriptor d;
        d.values = desc->data;
        d.pose = seq.poses[(std::size_t)(start + center)];
        d.frame_id = start + center;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<std::pair<std::string, TensorPtr>> EdeNet::named_params() const {
    std::vector<std::pair<std::string, TensorPtr>> out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const std::string bp = "block" + std::to_string(i) + ".";
        const auto& blk = blocks[i];
        for (std::size_t c = 0; c < blk.banks.size(); ++c) {
            const std::string kp = bp + "bank" + std::to_string(c) + ".";
            out.emplace_back(kp + "lambda", blk.banks[c].lambda_raw);
            out.emplace_back(kp + "gamma", blk.banks[c].gamma_raw);
            out.emplace_back(kp + "phi", blk.banks[c].phi);
            out.emplace_back(kp + "sigma", blk.banks[c].sigma_raw);
        }
        out.emplace_back(bp + "daa.F1", blk.daa.F1);
        out.emplace_back(bp + "daa.F2", blk.daa.F2);
        out.emplace_back(bp + "shift.W1", blk.W1);
        out.emplace_back(bp + "shift.b1", blk.b1);
        out.emplace_back(bp + "shift.W2", blk.W2);
        out.emplace_back(bp + "shift.b2", blk.b2);
    }
    out.emplace_back("agg.W", W_agg);
    out.emplace_back("agg.b", b_agg);
    return out;
}

void EdeNet::round_params_to_f32() {
    for (auto& [name, p] : named_params())
        for (auto& v : p->data) v = (double)(float)v;
}

std::vector<Descriptor> encode_energy_profile(const GprSequence& seq, int window) {
    if (window < 1) throw UsageError("encode_energy_profile: window must be >= 1");
    if (window > seq.S)
        throw UsageError("encode_energy_profile: window " + std::to_string(window) +
                         " exceeds sequence length " + std::to_string(seq.S));
    std::vector<Descriptor> out;
    out.reserve((std::size_t)(seq.S - window + 1));
    const int center = (window - 1) / 2;
    for (int start = 0; start + window <= seq.S; ++start) {
        std::vector<double> profile((std::size_t)seq.D, 0.0);
        for (int d = 0; d < seq.D; ++d) {
            double acc = 0.0;
            for (int w = 0; w < window; ++w)
                for (int c = 0; c < seq.C; ++c) acc += std::fabs(seq.at(start + w, d, c));
            profile[(std::size_t)d] = acc / ((double)window * seq.C);
        }
        double norm = 0.0;
        for (double v : profile) norm += v * v;
        norm = std::sqrt(norm);
        if (norm <= 1e-12)
            throw DegenerateInputError("encode_energy_profile: all-zero window at frame " +
                                       std::to_string(start));
        for (auto& v : profile) v /= norm;
        Descriptor d;
        d.values = std::move(profile);
        d.pose = seq.poses[(std::size_t)(start + center)];
        d.frame_id = start + center;
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace edenet
