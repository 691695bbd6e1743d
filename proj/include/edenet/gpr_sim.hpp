#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace edenet {

struct Reflector {
    double along_track = 0.0;  // meters
    double depth = 0.5;        // meters, > 0
    double radius = 0.05;      // meters, >= 0
    double reflectivity = 1.0; // in (0, 1]
};

// Relative dielectric constant, global or piecewise along track.
struct MediumProfile {
    double base_epsilon = 4.0;
    // (start_along_track, epsilon) pairs sorted by start; the last entry whose
    // start is <= x wins, base_epsilon before the first.
    std::vector<std::pair<double, double>> overrides;

    static MediumProfile uniform(double eps);
    double epsilon_at(double x) const;
};

struct SimConfig {
    double c = 0.2998;          // wave speed in vacuum, m/ns
    double time_bin = 0.2;      // ns per depth sample
    double dx = 0.1;            // meters per frame
    int depth_bins = 128;       // D
    int channels = 2;           // C
    double beamwidth = 0.7;     // radians
    double wavelet_width = 1.2; // ns
    double noise_sigma = 0.0;   // sensor noise applied to both halves of a dataset
    std::uint64_t seed = 1234;

    void validate() const;
};

struct GprSequence {
    int S = 0;
    int D = 0;
    int C = 0;
    std::vector<double> frames;  // S*D*C, [s][d][c]
    std::vector<std::array<double, 2>> poses;  // (utm_x, utm_y)

    double& at(int s, int d, int c) {
        return frames[((std::size_t)s * D + d) * C + c];
    }
    double at(int s, int d, int c) const {
        return frames[((std::size_t)s * D + d) * C + c];
    }
    double rms() const;
};

// Two-way travel time in ns for a point reflector at depth d0 seen from
// horizontal offset x_offset, t = (2/v) * sqrt(d0^2 + x^2), v = c / sqrt(eps).
double travel_time(double x_offset, double d0, double epsilon_r, double c);

// Pure and noiseless; superposition over reflectors holds exactly.
GprSequence render_bscan(const std::vector<Reflector>& scene, const MediumProfile& medium,
                         const SimConfig& cfg,
                         const std::vector<std::array<double, 2>>& trajectory);

enum class InterferenceKind { Gaussian, Stripe, Burst };

InterferenceKind interference_kind_from_string(const std::string& name);

GprSequence add_interference(const GprSequence& seq, InterferenceKind kind, double level,
                             std::uint64_t seed);

struct Dataset {
    GprSequence map;
    GprSequence queries;
};

// One random scene rendered twice along the same straight trajectory: the map
// under map_epsilon and the queries under query_epsilon plus gaussian
// interference at query_noise. Ground-truth correspondence is frame index.
Dataset make_dataset(std::uint64_t scene_seed, int n_locations, const SimConfig& cfg,
                     double map_epsilon, double query_epsilon, double query_noise);

}  // namespace edenet
