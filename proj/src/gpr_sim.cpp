#include "edenet/gpr_sim.hpp"

#include <algorithm>
#include <cmath>

#include "edenet/errors.hpp"
#include "edenet/rng.hpp"

namespace edenet {

MediumProfile MediumProfile::uniform(double eps) {
    MediumProfile m;
    m.base_epsilon = eps;
    return m;
}

double MediumProfile::epsilon_at(double x) const {
    double eps = base_epsilon;
    for (const auto& [start, value] : overrides) {
        if (start <= x) eps = value;
        else break;
    }
    return eps;
}

void SimConfig::validate() const {
    if (c <= 0 || time_bin <= 0 || dx <= 0 || beamwidth <= 0 || wavelet_width <= 0)
        throw ConfigError("SimConfig: c, time_bin, dx, beamwidth, wavelet_width must be positive");
    if (depth_bins < 1 || channels < 1)
        throw ConfigError("SimConfig: depth_bins and channels must be >= 1");
    if (noise_sigma < 0) throw ConfigError("SimConfig: noise_sigma must be >= 0");
}

double GprSequence::rms() const {
    if (frames.empty()) return 0.0;
    double acc = 0.0;
    for (double v : frames) acc += v * v;
    return std::sqrt(acc / (double)frames.size());
}

double travel_time(double x_offset, double d0, double epsilon_r, double c) {
    if (epsilon_r < 1.0) throw DomainError("travel_time: epsilon_r must be >= 1");
    if (d0 <= 0.0) throw DomainError("travel_time: depth must be positive");
    if (c <= 0.0) throw DomainError("travel_time: wave speed must be positive");
    const double v = c / std::sqrt(epsilon_r);
    return (2.0 / v) * std::sqrt(d0 * d0 + x_offset * x_offset);
}

namespace {

double ricker(double dt, double width) {
    const double a = M_PI * dt / width;
    const double a2 = a * a;
    return (1.0 - 2.0 * a2) * std::exp(-a2);
}

void check_reflector(const Reflector& r) {
    if (r.depth <= 0.0) throw DomainError("Reflector: depth must be positive");
    if (r.radius < 0.0) throw DomainError("Reflector: radius must be >= 0");
    if (r.reflectivity <= 0.0 || r.reflectivity > 1.0)
        throw DomainError("Reflector: reflectivity must lie in (0, 1]");
}

}  // namespace

GprSequence render_bscan(const std::vector<Reflector>& scene, const MediumProfile& medium,
                         const SimConfig& cfg,
                         const std::vector<std::array<double, 2>>& trajectory) {
    cfg.validate();
    if (trajectory.empty()) throw DimensionError("render_bscan: empty trajectory");
    for (const auto& r : scene) check_reflector(r);

    GprSequence seq;
    seq.S = (int)trajectory.size();
    seq.D = cfg.depth_bins;
    seq.C = cfg.channels;
    seq.frames.assign((std::size_t)seq.S * seq.D * seq.C, 0.0);
    seq.poses = trajectory;

    // along-track coordinate: cumulative arc length over the trajectory
    std::vector<double> along((std::size_t)seq.S, 0.0);
    for (int i = 1; i < seq.S; ++i) {
        const double ddx = trajectory[(std::size_t)i][0] - trajectory[(std::size_t)i - 1][0];
        const double ddy = trajectory[(std::size_t)i][1] - trajectory[(std::size_t)i - 1][1];
        along[(std::size_t)i] = along[(std::size_t)i - 1] + std::hypot(ddx, ddy);
    }

    const int halfspan = (int)std::ceil(1.5 * cfg.wavelet_width / cfg.time_bin);
    const double tan_bw = std::tan(cfg.beamwidth);

    for (int f = 0; f < seq.S; ++f) {
        const double eps = medium.epsilon_at(along[(std::size_t)f]);
        for (const auto& r : scene) {
            const double off_along = along[(std::size_t)f] - r.along_track;
            if (std::fabs(off_along) > (r.depth + 2.0 * r.radius) * tan_bw) continue;
            for (int ch = 0; ch < seq.C; ++ch) {
                const double off_cross = (ch - (seq.C - 1) * 0.5) * 0.01;
                const double offset = std::hypot(off_along, off_cross);
                const double t = travel_time(offset, r.depth, eps, cfg.c);
                const int b0 = (int)std::lround(t / cfg.time_bin);
                if (b0 < 0 || b0 >= seq.D) continue;  // silently clipped
                const double amp = r.reflectivity / (1.0 + t);
                const int lo = std::max(0, b0 - halfspan);
                const int hi = std::min(seq.D - 1, b0 + halfspan);
                for (int b = lo; b <= hi; ++b)
                    seq.at(f, b, ch) += amp * ricker((b - b0) * cfg.time_bin, cfg.wavelet_width);
            }
        }
    }
    return seq;
}

InterferenceKind interference_kind_from_string(const std::string& name) {
    if (name == "gaussian") return InterferenceKind::Gaussian;
    if (name == "stripe") return InterferenceKind::Stripe;
    if (name == "burst") return InterferenceKind::Burst;
    throw UsageError("unknown interference kind: " + name);
}

GprSequence add_interference(const GprSequence& seq, InterferenceKind kind, double level,
                             std::uint64_t seed) {
    if (level < 0.0) throw DomainError("add_interference: level must be >= 0");
    GprSequence out = seq;
    if (level == 0.0) return out;

    Rng rng(seed);
    const double scale = level * seq.rms();

    switch (kind) {
        case InterferenceKind::Gaussian:
            for (double& v : out.frames) v += rng.normal(0.0, scale);
            break;
        case InterferenceKind::Stripe: {
            const int n_stripes = std::max(1, seq.D / 16);
            for (int i = 0; i < n_stripes; ++i) {
                const int row0 = rng.uniform_int(seq.D);
                const int height = 1 + rng.uniform_int(3);
                const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
                const double amp = sign * scale * rng.uniform(0.5, 1.5);
                for (int d = row0; d < std::min(seq.D, row0 + height); ++d)
                    for (int s = 0; s < seq.S; ++s)
                        for (int c = 0; c < seq.C; ++c) out.at(s, d, c) += amp;
            }
            break;
        }
        case InterferenceKind::Burst: {
            const int n_bursts = std::max(1, seq.S / 20);
            for (int i = 0; i < n_bursts; ++i) {
                const int s0 = rng.uniform_int(seq.S);
                const int span = 1 + rng.uniform_int(std::max(1, seq.S / 10));
                for (int s = s0; s < std::min(seq.S, s0 + span); ++s)
                    for (int d = 0; d < seq.D; ++d)
                        for (int c = 0; c < seq.C; ++c)
                            out.at(s, d, c) = rng.normal(0.0, scale);
            }
            break;
        }
    }
    return out;
}

Dataset make_dataset(std::uint64_t scene_seed, int n_locations, const SimConfig& cfg,
                     double map_epsilon, double query_epsilon, double query_noise) {
    cfg.validate();
    if (n_locations < 2) throw ConfigError("make_dataset: n_locations must be >= 2");
    if (map_epsilon < 1.0 || query_epsilon < 1.0)
        throw DomainError("make_dataset: epsilon must be >= 1");
    if (query_noise < 0.0) throw DomainError("make_dataset: query_noise must be >= 0");

    std::vector<std::array<double, 2>> traj((std::size_t)n_locations);
    for (int i = 0; i < n_locations; ++i) traj[(std::size_t)i] = {i * cfg.dx, 0.0};
    const double track_len = (n_locations - 1) * cfg.dx;

    // depths chosen so apex times stay inside the record for both epsilons
    const double eps_max = std::max(map_epsilon, query_epsilon);
    const double depth_bound =
        cfg.c * cfg.depth_bins * cfg.time_bin / (2.0 * std::sqrt(eps_max));

    Rng rng(scene_seed);
    const int n_ref = std::max(3, n_locations / 2);
    std::vector<Reflector> scene;
    scene.reserve((std::size_t)n_ref);
    for (int i = 0; i < n_ref; ++i) {
        Reflector r;
        r.along_track = rng.uniform(0.0, track_len);
        r.depth = rng.uniform(0.2 * depth_bound, 0.8 * depth_bound);
        r.radius = rng.uniform(0.04, 0.15);
        r.reflectivity = rng.uniform(0.3, 1.0);
        scene.push_back(r);
    }

    Dataset ds;
    ds.map = render_bscan(scene, MediumProfile::uniform(map_epsilon), cfg, traj);
    ds.queries = render_bscan(scene, MediumProfile::uniform(query_epsilon), cfg, traj);

    if (cfg.noise_sigma > 0.0) {
        const std::uint64_t sensor_seed = scene_seed * 0x9e3779b97f4a7c15ULL + 7;
        ds.map = add_interference(ds.map, InterferenceKind::Gaussian, cfg.noise_sigma,
                                  sensor_seed);
        ds.queries = add_interference(ds.queries, InterferenceKind::Gaussian, cfg.noise_sigma,
                                      sensor_seed);
    }
    if (query_noise > 0.0) {
        const std::uint64_t noise_seed = scene_seed * 0x9e3779b97f4a7c15ULL + 13;
        ds.queries =
            add_interference(ds.queries, InterferenceKind::Gaussian, query_noise, noise_seed);
    }
    return ds;
}

}  // namespace edenet
