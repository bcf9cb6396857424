#pragma once

#include "bnn/gauss.hpp"
#include "bnn/probit.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace bnn {

/// f(z) = max(alpha z, beta z) with 0 <= alpha <= 1 and alpha <= beta.
struct PwlParams {
    double alpha = 0.0;
    double beta = 1.0;

    void validate() const;
    [[nodiscard]] static PwlParams relu() { return {0.0, 1.0}; }
    [[nodiscard]] static PwlParams leaky(double alpha) { return {alpha, 1.0}; }
    [[nodiscard]] double operator()(double z) const { return z >= 0.0 ? beta * z : alpha * z; }
};

/// d(j, i) = E{ds(z, j) / d(z_j - z_i)} for i != j; zero diagonal. Rows cover every class.
struct SoftmaxDerivs {
    Eigen::MatrixXd d;
};

/// Exact output moments of a piecewise-linear layer under independent Gaussian inputs.
[[nodiscard]] MomentTriple pwl_moments(const GaussianDiag& z, const PwlParams& p);

[[nodiscard]] SoftmaxDerivs softmax_deriv_expectations(const GaussianDiag& z, const ProbitConfig& cfg);

/// Probit-approximated softmax moments over the first n-1 classes; the last class is implicit.
[[nodiscard]] MomentTriple softmax_moments(const GaussianDiag& z, const ProbitConfig& cfg);

/// Exact softmax over all classes, computed stably.
[[nodiscard]] Eigen::VectorXd softmax(const Eigen::VectorXd& z);

struct CalibrationOptions {
    double lambda_lo = 0.05;
    double lambda_hi = 3.0;
    double rho_hi = 0.99;
    double tol = 1e-7;
    int max_sweeps = 200;
};

/// Uniform lattice over [-half_width, half_width]^(n-1) of logit differences theta.
[[nodiscard]] std::vector<Eigen::VectorXd> default_calibration_grid(std::size_t n_classes,
                                                                    int points_per_axis = 11,
                                                                    double half_width = 6.0);

/// Mean squared error of Phi(lambda theta; 0, Sigma0) against 1 / (1 + sum exp(-theta_t)).
[[nodiscard]] double calibration_loss(const ProbitConfig& cfg, const std::vector<Eigen::VectorXd>& grid);

/// Coordinate descent over (lambda, shared rho) with golden-section line searches.
/// Throws CalibrationError when max_sweeps is reached without convergence.
[[nodiscard]] ProbitConfig calibrate_probit(std::size_t n_classes, const std::vector<Eigen::VectorXd>& grid,
                                            const CalibrationOptions& options = {});

}  // namespace bnn
