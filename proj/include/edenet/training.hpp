#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edenet/gpr_sim.hpp"
#include "edenet/network.hpp"
#include "edenet/tensor.hpp"

namespace edenet {

struct TrainConfig {
    double margin = 0.3;
    double learning_rate = 1e-4;
    int num_negatives = 10;
    int epochs = 1;
    std::uint64_t seed = 1;
    int max_steps = 0;  // cap on total optimizer steps; 0 means epochs decide

    void validate() const;
};

// Index of the candidate embedding nearest to the query in L2; ties break to
// the lowest index. Throws MiningError on an empty candidate set.
int mine_positive(const std::vector<double>& query_embedding,
                  const std::vector<std::vector<double>>& candidates);

// L = sum_n max(0, margin + d(q,p) - d(q,n)) with Euclidean d, built on the
// graph so gradients reach all three embeddings. Throws DimensionError on
// mismatched dims, UsageError on empty negatives, DomainError on margin <= 0.
TensorPtr triplet_loss(const TensorPtr& q, const TensorPtr& p,
                       const std::vector<TensorPtr>& negatives, double margin);

// Adam with bias correction over a fixed parameter list. step() consumes the
// gradients currently stored on the parameters; a non-finite gradient aborts
// the step (logged to stderr, gradients zeroed, returns false).
class AdamOptimizer {
public:
    explicit AdamOptimizer(std::vector<TensorPtr> params, double lr, double beta1 = 0.9,
                           double beta2 = 0.999, double eps = 1e-8);

    bool step();
    void zero_grad();
    int steps_taken() const { return t_; }

private:
    std::vector<TensorPtr> params_;
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

struct TrainLogEntry {
    int epoch = 0;
    int step = 0;         // cumulative optimizer steps at epoch end
    double loss = 0.0;    // mean triplet loss over the epoch's updates
    double val_recall1 = 0.0;
};

struct TrainResult {
    EdeNet net;
    int steps = 0;
    std::vector<TrainLogEntry> log;
    std::vector<std::string> warnings;

    explicit TrainResult(EdeNet n) : net(std::move(n)) {}
};

// Triplet training with geographic mining: positives are map windows whose
// centre pose lies within 3 m of the query's, the hardest positive is the
// embedding-space nearest among them, negatives are sampled uniformly beyond
// 3 m. Query windows split 7:3 into contiguous train/validation segments;
// validation recall@1 is logged per epoch. Deterministic under cfg.seed.
TrainResult train(const GprSequence& map_seq, const GprSequence& query_seq,
                  const TrainConfig& cfg, const NetConfig& net_cfg);

}  // namespace edenet
