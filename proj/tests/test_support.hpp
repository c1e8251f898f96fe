#pragma once
// Shared test helpers: the central finite-difference oracle and scratch
// directory management.

#include <cmath>
#include <filesystem>
#include <string>

namespace test_support {

// Central finite difference of a scalar function with respect to *coord.
// The callable must re-run the forward pass reading the (mutated) value.
template <typename LossFn>
double fd_grad(LossFn&& loss, double* coord) {
    const double orig = *coord;
    const double h = 1e-6 * std::max(1.0, std::fabs(orig));
    *coord = orig + h;
    const double fp = loss();
    *coord = orig - h;
    const double fm = loss();
    *coord = orig;
    return (fp - fm) / (2.0 * h);
}

// Relative error with an absolute floor for near-zero gradients.
inline double grad_rel_err(double analytic, double numeric) {
    return std::fabs(analytic - numeric) /
           std::max(std::fabs(analytic) + std::fabs(numeric), 1.0);
}

// Fresh per-test scratch directory under the current working directory.
inline std::string scratch_dir(const std::string& name) {
    const std::filesystem::path dir = std::filesystem::path("scratch") / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace test_support
