#include "edenet/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "edenet/errors.hpp"

namespace edenet {

using json = nlohmann::ordered_json;

namespace {

void reject_unknown(const json& obj, const char* section,
                    std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok)
            throw ConfigError(std::string("config: unknown key \"") + key + "\" in " + section);
    }
}

json scales_to_json(const std::vector<EdeBlockConfig>& scales) {
    json arr = json::array();
    for (const auto& s : scales) {
        json e;
        e["K"] = s.K;
        e["k"] = s.k;
        e["shift_channels"] = s.shift_channels;
        e["pool_window"] = s.pool_window;
        e["pool_stride"] = s.pool_stride;
        arr.push_back(e);
    }
    return arr;
}

std::vector<EdeBlockConfig> scales_from_json(const json& arr) {
    if (!arr.is_array() || arr.empty())
        throw ConfigError("config: network.scales must be a nonempty array");
    std::vector<EdeBlockConfig> out;
    for (const auto& e : arr) {
        if (!e.is_object()) throw ConfigError("config: scale entries must be objects");
        reject_unknown(e, "network.scales[]",
                       {"K", "k", "shift_channels", "pool_window", "pool_stride"});
        EdeBlockConfig s;
        s.K = e.value("K", s.K);
        s.k = e.value("k", s.k);
        s.shift_channels = e.value("shift_channels", s.shift_channels);
        s.pool_window = e.value("pool_window", s.pool_window);
        s.pool_stride = e.value("pool_stride", s.pool_stride);
        out.push_back(s);
    }
    return out;
}

json net_to_json_obj(const NetConfig& cfg) {
    json n;
    n["scales"] = scales_to_json(cfg.scales);
    n["descriptor_dim"] = cfg.descriptor_dim;
    n["reduction"] = cfg.reduction;
    n["window"] = cfg.window;
    return n;
}

void net_from_json_obj(const json& n, NetConfig& cfg) {
    reject_unknown(n, "network", {"scales", "descriptor_dim", "reduction", "window"});
    if (n.contains("scales")) cfg.scales = scales_from_json(n["scales"]);
    cfg.descriptor_dim = n.value("descriptor_dim", cfg.descriptor_dim);
    cfg.reduction = n.value("reduction", cfg.reduction);
    cfg.window = n.value("window", cfg.window);
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    cfg.seed = 1234;

    cfg.sim.time_bin = 0.2;
    cfg.sim.dx = 0.5;
    cfg.sim.depth_bins = 128;
    cfg.sim.channels = 2;
    cfg.sim.beamwidth = 0.7;
    cfg.sim.wavelet_width = 1.2;
    cfg.sim.noise_sigma = 0.0;
    cfg.sim.seed = cfg.seed;

    cfg.n_locations = 50;
    cfg.map_epsilon = 4.0;
    cfg.query_epsilon = 5.0;
    cfg.query_noise = 0.3;

    EdeBlockConfig coarse;
    coarse.K = 11;
    coarse.k = 16;
    coarse.shift_channels = 8;
    coarse.pool_window = 2;
    coarse.pool_stride = 2;
    EdeBlockConfig fine = coarse;
    fine.K = 5;
    cfg.net.scales = {coarse, fine};
    cfg.net.descriptor_dim = 128;
    cfg.net.reduction = 4;
    cfg.net.window = 16;
    cfg.net.depth_bins = cfg.sim.depth_bins;
    cfg.net.input_channels = cfg.sim.channels;

    cfg.train.margin = 0.3;
    cfg.train.learning_rate = 1e-3;
    cfg.train.num_negatives = 10;
    cfg.train.epochs = 100;
    cfg.train.max_steps = 500;
    cfg.train.seed = cfg.seed;

    cfg.k_values = {1, 5, 10};
    cfg.dist_thresh = 3.0;
    return cfg;
}

void ExperimentConfig::validate() const {
    sim.validate();
    net.validate();
    train.validate();
    if (n_locations < 2) throw ConfigError("config: n_locations must be >= 2");
    if (map_epsilon < 1.0 || query_epsilon < 1.0)
        throw ConfigError("config: dielectric constants must be >= 1");
    if (query_noise < 0.0) throw ConfigError("config: query_noise must be >= 0");
    if (k_values.empty()) throw ConfigError("config: k_values must be nonempty");
    int prev = 0;
    for (int k : k_values) {
        if (k <= prev) throw ConfigError("config: k_values must be strictly increasing and >= 1");
        prev = k;
    }
    if (!(dist_thresh > 0.0)) throw ConfigError("config: dist_thresh must be > 0");
    if (net.depth_bins != sim.depth_bins || net.input_channels != sim.channels)
        throw ConfigError("config: network dims must mirror the simulator");
}

std::string ExperimentConfig::to_json() const {
    json doc;
    doc["seed"] = seed;
    json s;
    s["time_bin"] = sim.time_bin;
    s["dx"] = sim.dx;
    s["depth_bins"] = sim.depth_bins;
    s["channels"] = sim.channels;
    s["beamwidth"] = sim.beamwidth;
    s["wavelet_width"] = sim.wavelet_width;
    s["noise_sigma"] = sim.noise_sigma;
    s["n_locations"] = n_locations;
    s["map_epsilon"] = map_epsilon;
    s["query_epsilon"] = query_epsilon;
    s["query_noise"] = query_noise;
    doc["simulator"] = s;
    doc["network"] = net_to_json_obj(net);
    json t;
    t["margin"] = train.margin;
    t["learning_rate"] = train.learning_rate;
    t["num_negatives"] = train.num_negatives;
    t["epochs"] = train.epochs;
    t["max_steps"] = train.max_steps;
    doc["training"] = t;
    json e;
    e["k_values"] = k_values;
    e["dist_thresh"] = dist_thresh;
    doc["evaluation"] = e;
    return doc.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown(doc, "the top level",
                   {"seed", "simulator", "network", "training", "evaluation"});

    ExperimentConfig cfg = defaults();
    try {
        cfg.seed = doc.value("seed", cfg.seed);
        if (doc.contains("simulator")) {
            const auto& s = doc["simulator"];
            reject_unknown(s, "simulator",
                           {"time_bin", "dx", "depth_bins", "channels", "beamwidth",
                            "wavelet_width", "noise_sigma", "n_locations", "map_epsilon",
                            "query_epsilon", "query_noise"});
            cfg.sim.time_bin = s.value("time_bin", cfg.sim.time_bin);
            cfg.sim.dx = s.value("dx", cfg.sim.dx);
            cfg.sim.depth_bins = s.value("depth_bins", cfg.sim.depth_bins);
            cfg.sim.channels = s.value("channels", cfg.sim.channels);
            cfg.sim.beamwidth = s.value("beamwidth", cfg.sim.beamwidth);
            cfg.sim.wavelet_width = s.value("wavelet_width", cfg.sim.wavelet_width);
            cfg.sim.noise_sigma = s.value("noise_sigma", cfg.sim.noise_sigma);
            cfg.n_locations = s.value("n_locations", cfg.n_locations);
            cfg.map_epsilon = s.value("map_epsilon", cfg.map_epsilon);
            cfg.query_epsilon = s.value("query_epsilon", cfg.query_epsilon);
            cfg.query_noise = s.value("query_noise", cfg.query_noise);
        }
        if (doc.contains("network")) net_from_json_obj(doc["network"], cfg.net);
        if (doc.contains("training")) {
            const auto& t = doc["training"];
            reject_unknown(t, "training",
                           {"margin", "learning_rate", "num_negatives", "epochs", "max_steps"});
            cfg.train.margin = t.value("margin", cfg.train.margin);
            cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
            cfg.train.num_negatives = t.value("num_negatives", cfg.train.num_negatives);
            cfg.train.epochs = t.value("epochs", cfg.train.epochs);
            cfg.train.max_steps = t.value("max_steps", cfg.train.max_steps);
        }
        if (doc.contains("evaluation")) {
            const auto& e = doc["evaluation"];
            reject_unknown(e, "evaluation", {"k_values", "dist_thresh"});
            if (e.contains("k_values")) cfg.k_values = e["k_values"].get<std::vector<int>>();
            cfg.dist_thresh = e.value("dist_thresh", cfg.dist_thresh);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: malformed value: ") + e.what());
    }

    // one seed drives every stage
    cfg.sim.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
    // the network always consumes what the simulator produces
    cfg.net.depth_bins = cfg.sim.depth_bins;
    cfg.net.input_channels = cfg.sim.channels;

    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw IoError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string net_config_to_json(const NetConfig& cfg) {
    json n = net_to_json_obj(cfg);
    n["depth_bins"] = cfg.depth_bins;
    n["input_channels"] = cfg.input_channels;
    return n.dump();
}

NetConfig net_config_from_json(const std::string& text) {
    json n;
    try {
        n = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid network JSON: ") + e.what());
    }
    if (!n.is_object()) throw ConfigError("config: network JSON must be an object");
    NetConfig cfg;
    try {
        reject_unknown(n, "network",
                       {"scales", "descriptor_dim", "reduction", "window", "depth_bins",
                        "input_channels"});
        if (n.contains("scales")) cfg.scales = scales_from_json(n["scales"]);
        cfg.descriptor_dim = n.value("descriptor_dim", cfg.descriptor_dim);
        cfg.reduction = n.value("reduction", cfg.reduction);
        cfg.window = n.value("window", cfg.window);
        cfg.depth_bins = n.value("depth_bins", cfg.depth_bins);
        cfg.input_channels = n.value("input_channels", cfg.input_channels);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: malformed network value: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

}  // namespace edenet
