#pragma once

#include <cstdint>

namespace mvldl {

/// Training hyperparameters.
///
/// lambda weighs the prediction-fit term, mu1/mu2 the feature and
/// distribution reconstruction terms, sigma the cross-view similarity
/// consistency, gamma the cross-view distribution consistency. k is the
/// per-view neighbor count. tol/max_iter govern the outer alternating loop,
/// qp_tol/qp_max_iter the inner simplex-QP solves.
struct Hyperparams {
    double lambda = 1.0;
    double mu1 = 0.1;
    double mu2 = 10.0;
    double sigma = 1000.0;
    double gamma = 100.0;
    int k = 10;
    double tol = 1e-6;
    int max_iter = 100;
    double qp_tol = 1e-8;
    int qp_max_iter = 10000;
    std::uint64_t seed = 0;

    /// Throws ParameterError when a field is out of range.
    void validate() const;
};

}  // namespace mvldl
