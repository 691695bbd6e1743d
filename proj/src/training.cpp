#include "edenet/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "edenet/errors.hpp"
#include "edenet/retrieval.hpp"
#include "edenet/rng.hpp"

namespace edenet {

void TrainConfig::validate() const {
    if (!(margin > 0.0)) throw ConfigError("TrainConfig: margin must be > 0");
    if (!(learning_rate > 0.0)) throw ConfigError("TrainConfig: learning_rate must be > 0");
    if (num_negatives < 1) throw ConfigError("TrainConfig: num_negatives must be >= 1");
    if (epochs < 0) throw ConfigError("TrainConfig: epochs must be >= 0");
    if (max_steps < 0) throw ConfigError("TrainConfig: max_steps must be >= 0");
}

int mine_positive(const std::vector<double>& query_embedding,
                  const std::vector<std::vector<double>>& candidates) {
    if (candidates.empty()) throw MiningError("mine_positive: empty candidate set");
    int best = 0;
    double best_d2 = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (c.size() != query_embedding.size())
            throw DimensionError("mine_positive: candidate " + std::to_string(i) + " has dim " +
                                 std::to_string(c.size()) + ", query has dim " +
                                 std::to_string(query_embedding.size()));
        double d2 = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) {
            const double diff = c[j] - query_embedding[j];
            d2 += diff * diff;
        }
        if (best_d2 < 0.0 || d2 < best_d2) {
            best_d2 = d2;
            best = (int)i;
        }
    }
    return best;
}

namespace {

TensorPtr embedding_distance(const TensorPtr& a, const TensorPtr& b) {
    auto d = sub(a, b);
    return sqrt_op(sum_all(mul(d, d)));
}

}  // namespace

TensorPtr triplet_loss(const TensorPtr& q, const TensorPtr& p,
                       const std::vector<TensorPtr>& negatives, double margin) {
    if (!(margin > 0.0)) throw DomainError("triplet_loss: margin must be > 0");
    if (negatives.empty()) throw UsageError("triplet_loss: no negatives");
    auto dqp = embedding_distance(q, p);
    TensorPtr loss;
    for (const auto& n : negatives) {
        auto term = relu(add_scalar(sub(dqp, embedding_distance(q, n)), margin));
        loss = loss ? add(loss, term) : term;
    }
    return loss;
}

AdamOptimizer::AdamOptimizer(std::vector<TensorPtr> params, double lr, double beta1, double beta2,
                             double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        if (p->grad.size() != p->data.size()) p->grad.assign(p->data.size(), 0.0);
        m_.emplace_back(p->data.size(), 0.0);
        v_.emplace_back(p->data.size(), 0.0);
    }
}

void AdamOptimizer::zero_grad() {
    for (auto& p : params_) p->grad.assign(p->data.size(), 0.0);
}

bool AdamOptimizer::step() {
    for (const auto& p : params_)
        for (double g : p->grad)
            if (!std::isfinite(g)) {
                std::cerr << "adam: non-finite gradient, step aborted\n";
                zero_grad();
                return false;
            }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = *params_[i];
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < p.data.size(); ++j) {
            const double g = p.grad[j];
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
            p.data[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
        }
    }
    return true;
}

namespace {

constexpr double kGeoThreshold = 3.0;  // metres; positives inside, negatives outside

double pose_distance(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1];
    return std::sqrt(dx * dx + dy * dy);
}

TensorPtr window_tensor(const GprSequence& seq, int start, int window) {
    std::vector<double> data((std::size_t)seq.C * seq.D * window);
    for (int c = 0; c < seq.C; ++c)
        for (int d = 0; d < seq.D; ++d)
            for (int w = 0; w < window; ++w)
                data[((std::size_t)c * seq.D + d) * window + w] = seq.at(start + w, d, c);
    return Tensor::make({seq.C, seq.D, window}, std::move(data));
}

void check_sequence(const GprSequence& seq, const NetConfig& ncfg, const char* which) {
    if (seq.S < ncfg.window)
        throw UsageError(std::string("train: ") + which + " sequence has " +
                         std::to_string(seq.S) + " frames, window needs " +
                         std::to_string(ncfg.window));
    if (seq.C != ncfg.input_channels || seq.D != ncfg.depth_bins)
        throw DimensionError(std::string("train: ") + which + " sequence is D=" +
                             std::to_string(seq.D) + " C=" + std::to_string(seq.C) +
                             ", network expects D=" + std::to_string(ncfg.depth_bins) +
                             " C=" + std::to_string(ncfg.input_channels));
    if ((int)seq.poses.size() != seq.S)
        throw DimensionError(std::string("train: ") + which + " sequence has " +
                             std::to_string(seq.poses.size()) + " poses for " +
                             std::to_string(seq.S) + " frames");
}

}  // namespace

TrainResult train(const GprSequence& map_seq, const GprSequence& query_seq,
                  const TrainConfig& cfg, const NetConfig& net_cfg) {
    cfg.validate();
    net_cfg.validate();
    check_sequence(map_seq, net_cfg, "map");
    check_sequence(query_seq, net_cfg, "query");

    TrainResult res{EdeNet(net_cfg, cfg.seed)};
    auto& net = res.net;
    const int W = net_cfg.window;
    const int center = (W - 1) / 2;
    const int n_map = map_seq.S - W + 1;
    const int n_query = query_seq.S - W + 1;

    auto warn = [&](const std::string& msg) {
        res.warnings.push_back(msg);
        std::cerr << "train: " << msg << "\n";
    };

    // geographic candidate pools, fixed by poses
    std::vector<std::array<double, 2>> map_centers((std::size_t)n_map);
    for (int m = 0; m < n_map; ++m) map_centers[(std::size_t)m] = map_seq.poses[(std::size_t)(m + center)];
    std::vector<std::vector<int>> positives((std::size_t)n_query);
    std::vector<std::vector<int>> negative_pool((std::size_t)n_query);
    for (int q = 0; q < n_query; ++q) {
        const auto qc = query_seq.poses[(std::size_t)(q + center)];
        for (int m = 0; m < n_map; ++m) {
            if (pose_distance(qc, map_centers[(std::size_t)m]) <= kGeoThreshold)
                positives[(std::size_t)q].push_back(m);
            else
                negative_pool[(std::size_t)q].push_back(m);
        }
    }

    // 7:3 contiguous split of query windows: leading segment trains,
    // trailing segment validates
    const int n_train = (n_query * 7) / 10;
    std::vector<int> train_idx;
    for (int q = 0; q < n_train; ++q) train_idx.push_back(q);
    if (n_train == 0) warn("no training segment (too few query windows)");

    std::vector<TensorPtr> params;
    for (const auto& [name, p] : net.named_params()) params.push_back(p);
    AdamOptimizer opt(params, cfg.learning_rate);
    Rng rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 101);

    auto embed_nograd = [&](const GprSequence& seq, int start) {
        NoGradGuard ng;
        return net.forward_window(window_tensor(seq, start, W), L2NormMode::Train)->data;
    };

    int total_steps = 0;
    bool step_budget_hit = false;
    for (int epoch = 0; epoch < cfg.epochs && !step_budget_hit; ++epoch) {
        // Fisher-Yates shuffle of the training queries
        std::vector<int> order = train_idx;
        for (int i = (int)order.size() - 1; i > 0; --i) {
            const int j = rng.uniform_int(i + 1);
            std::swap(order[(std::size_t)i], order[(std::size_t)j]);
        }

        double loss_sum = 0.0;
        int updates = 0;
        for (int q : order) {
            if (cfg.max_steps > 0 && total_steps >= cfg.max_steps) {
                step_budget_hit = true;
                break;
            }
            const auto& pos = positives[(std::size_t)q];
            const auto& negs = negative_pool[(std::size_t)q];
            if (pos.empty()) {
                warn("query window " + std::to_string(q) + " has no positives within 3 m, skipped");
                continue;
            }
            if (negs.empty()) {
                warn("query window " + std::to_string(q) + " has no negatives beyond 3 m, skipped");
                continue;
            }

            // hardest positive under the current weights
            const auto q_emb = embed_nograd(query_seq, q);
            std::vector<std::vector<double>> cand_embs;
            cand_embs.reserve(pos.size());
            for (int m : pos) cand_embs.push_back(embed_nograd(map_seq, m));
            const int p_win = pos[(std::size_t)mine_positive(q_emb, cand_embs)];

            std::vector<int> neg_wins((std::size_t)cfg.num_negatives);
            for (auto& n : neg_wins) n = negs[(std::size_t)rng.uniform_int((int)negs.size())];

            // geography assertions on the mined batch
            const auto qc = query_seq.poses[(std::size_t)(q + center)];
            if (pose_distance(qc, map_centers[(std::size_t)p_win]) > kGeoThreshold)
                throw DomainError("train: mined positive beyond 3 m");
            for (int n : neg_wins)
                if (pose_distance(qc, map_centers[(std::size_t)n]) <= kGeoThreshold)
                    throw DomainError("train: sampled negative within 3 m");

            auto fq = net.forward_window(window_tensor(query_seq, q, W), L2NormMode::Train);
            auto fp = net.forward_window(window_tensor(map_seq, p_win, W), L2NormMode::Train);
            std::vector<TensorPtr> fns;
            fns.reserve(neg_wins.size());
            for (int n : neg_wins)
                fns.push_back(net.forward_window(window_tensor(map_seq, n, W), L2NormMode::Train));

            auto loss = triplet_loss(fq, fp, fns, cfg.margin);
            if (!std::isfinite(loss->data[0])) {
                warn("non-finite loss at query window " + std::to_string(q) + ", skipped");
                continue;
            }
            opt.zero_grad();
            loss->backward();
            if (opt.step()) {
                net.round_params_to_f32();
                ++total_steps;
                loss_sum += loss->data[0];
                ++updates;
            }
        }
        if (step_budget_hit && updates == 0) break;  // budget spent before this epoch began
        if (updates == 0 && !step_budget_hit) {
            // nothing trained this epoch; log it and keep going
            warn("epoch " + std::to_string(epoch) + " made no updates");
        }

        // validation recall@1 on the held-out 30% of query windows
        double recall = 0.0;
        if (n_train < n_query) {
            auto map_descs = net.encode_sequence(map_seq, W);
            auto query_descs = net.encode_sequence(query_seq, W);
            auto index = build_index(map_descs);
            std::vector<MatchResult> results;
            std::vector<std::array<double, 2>> poses;
            for (int q = n_train; q < n_query; ++q) {
                results.push_back(query(index, query_descs[(std::size_t)q], 1));
                poses.push_back(query_descs[(std::size_t)q].pose);
            }
            recall = recall_at_k(results, poses, 1, kGeoThreshold);
        }
        TrainLogEntry entry;
        entry.epoch = epoch;
        entry.step = total_steps;
        entry.loss = updates > 0 ? loss_sum / updates : 0.0;
        entry.val_recall1 = recall;
        res.log.push_back(entry);
    }
    res.steps = total_steps;
    return res;
}

}  // namespace edenet
