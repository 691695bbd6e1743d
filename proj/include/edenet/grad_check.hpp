#pragma once

#include <functional>
#include <string>
#include <vector>

#include "edenet/tensor.hpp"

namespace edenet {

/// Scalar loss rebuilt from the current parameter values on every call.
/// Must be deterministic for central differences to mean anything.
using LossFn = std::function<TensorPtr()>;

struct GradCheckReport {
    std::vector<std::string> names;      // one entry per parameter tensor
    std::vector<double> max_rel_error;   // worst element within that tensor
    double overall = 0.0;
};

/// Compares the reverse-mode gradient of f against central differences
/// (f(p+h) - f(p-h)) / 2h for every element of every parameter. Relative
/// error uses denominator max(|analytic|, |numeric|, 1e-8). Returns the
/// maximum over all elements.
double grad_check(const LossFn& f, const std::vector<TensorPtr>& params, double h);

/// Same sweep, reported per named parameter tensor. `corrupt_name`, when
/// non-empty, perturbs that parameter's analytic gradient before the
/// comparison; it exists as a negative control for the check itself.
GradCheckReport grad_check_detailed(const LossFn& f, const std::vector<std::string>& names,
                                    const std::vector<TensorPtr>& params, double h,
                                    const std::string& corrupt_name = "");

}  // namespace edenet
