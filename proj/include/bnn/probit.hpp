#pragma once

#include "bnn/mvn.hpp"

#include <Eigen/Dense>

#include <cstddef>

namespace bnn {

/// Scale fitted to the exact softmax on a [-6, 6] lattice with rho = 0.5.
inline constexpr double kDefaultLambda = 0.575;
/// Classical logistic-probit match sqrt(pi / 8).
inline constexpr double kSigmoidLambda = 0.62665706865775012560;
inline constexpr double kDefaultRho = 0.5;

/// Probit surrogate of the softmax: s(z, j) ~ Phi(lambda (z_j - z_t), t != j; 0, Sigma0),
/// with Sigma0 the (n-1) x (n-1) correlation matrix rho.
struct ProbitConfig {
    double lambda = kDefaultLambda;
    Eigen::MatrixXd rho;
    MvnOptions mvn;

    /// Number of classes n this config serves (rho is (n-1) x (n-1)).
    [[nodiscard]] std::size_t classes() const { return static_cast<std::size_t>(rho.rows()) + 1; }
    void validate() const;

    [[nodiscard]] static ProbitConfig equicorrelated(std::size_t n_classes, double lambda = kDefaultLambda,
                                                     double rho = kDefaultRho);
};

/// Correlation of the standardized differences for class j.
/// scaled_var holds the pre-activation variances already multiplied by lambda^2.
[[nodiscard]] CorrelationMatrix std_correlation(const ProbitConfig& cfg, const Eigen::VectorXd& scaled_var,
                                                std::size_t j);

/// Standardized upper limits lambda (mu_j - mu_t) / sqrt(1 + lambda^2 var_j + lambda^2 var_t), t != j.
[[nodiscard]] Eigen::VectorXd std_limits(const ProbitConfig& cfg, const Eigen::VectorXd& mu_z,
                                         const Eigen::VectorXd& var_z, std::size_t j);

/// Closed form of E{Phi(lambda (z_j - z_t), t != j; 0, Sigma0)} for independent Gaussian z.
[[nodiscard]] double gaussian_probit_integral(const Eigen::VectorXd& mu_z, const Eigen::VectorXd& var_z,
                                              const ProbitConfig& cfg, std::size_t j);

}  // namespace bnn
