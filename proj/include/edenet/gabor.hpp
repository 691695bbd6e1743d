#pragma once

#include <string>
#include <vector>

#include "edenet/tensor.hpp"

namespace edenet {

// One learnable Gabor bank: k fixed directions theta_d = d*pi/k sharing a
// single learnable (lambda, gamma, phi, sigma). Positivity of lambda, gamma,
// sigma is kept by storing unconstrained values mapped through softplus.
struct GaborBank {
    int K = 5;
    int n_dirs = 4;
    TensorPtr lambda_raw;
    TensorPtr gamma_raw;
    TensorPtr phi;
    TensorPtr sigma_raw;

    GaborBank(int K, int n_dirs);

    double theta(int dir_index) const;  // dir_index in [1, n_dirs]
    double lambda() const;
    double gamma() const;
    double sigma() const;

    // set effective (positive) shape parameters; phi is taken as-is
    void set_shape(double lambda, double gamma, double phi_value, double sigma);

    std::vector<TensorPtr> params() const;
};

double softplus_value(double x);
double softplus_inverse(double y);

// Raw kernel values (before DC removal) for explicit shape parameters.
std::vector<double> gabor_kernel_values(int K, double theta, double lambda, double gamma,
                                        double phi, double sigma);

// K x K kernel for one direction, differentiable w.r.t. the bank parameters.
TensorPtr gabor_kernel(const GaborBank& bank, int dir_index);

// F = LG - mean(LG)
TensorPtr zero_dc(const TensorPtr& kernel);

// X: [C_in, H, W], one bank per input channel, all sharing K and n_dirs == k.
// Returns [k, H, W] with same-padding; responses summed over input channels.
TensorPtr lgf_forward(const TensorPtr& X, const std::vector<GaborBank>& banks, int k);

// Debug export: banks stacked as rows, directions as columns, per-tile
// normalized to 8-bit grayscale. Lossy, for inspection only.
void write_kernel_grid_pgm(const std::vector<GaborBank>& banks, const std::string& path);

}  // namespace edenet
