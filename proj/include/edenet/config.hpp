#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edenet/gpr_sim.hpp"
#include "edenet/network.hpp"
#include "edenet/training.hpp"

namespace edenet {

// One experiment, one JSON document: simulator, network, training, and
// evaluation settings under a single seed. Missing keys fall back to the
// defaults; unknown keys are rejected.
struct ExperimentConfig {
    std::uint64_t seed = 1234;
    SimConfig sim;
    int n_locations = 50;
    double map_epsilon = 4.0;
    double query_epsilon = 5.0;
    double query_noise = 0.3;
    NetConfig net;
    TrainConfig train;
    std::vector<int> k_values = {1, 5, 10};
    double dist_thresh = 3.0;

    void validate() const;
    std::string to_json() const;

    // the default synthetic experiment: 50-location map at eps 4.0, queries
    // at eps 5.0 with gaussian interference 0.3, scales {11, 5}, k = 16,
    // d = 128, 500 training steps
    static ExperimentConfig defaults();
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::string& path);
};

// NetConfig <-> JSON, shared with checkpoint metadata.
std::string net_config_to_json(const NetConfig& cfg);
NetConfig net_config_from_json(const std::string& text);

}  // namespace edenet
