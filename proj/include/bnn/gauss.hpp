#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace bnn {

/// Independent Gaussian coordinates: mean and per-coordinate variance.
struct GaussianDiag {
    Eigen::VectorXd mean;
    Eigen::VectorXd var;

    GaussianDiag() = default;
    GaussianDiag(Eigen::VectorXd mean_, Eigen::VectorXd var_);

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(mean.size()); }
    /// Throws ConfigError on length mismatch or negative/non-finite variance.
    void validate() const;
};

/// Gaussian vector with a full covariance.
struct GaussianFull {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(mean.size()); }
};

/// Gaussian over one neuron's (possibly bias-augmented) weight column.
struct WeightPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(mean.size()); }
    void validate(double symmetry_tol = 1e-10) const;
};

/// Output moments of one activation layer. Rows of cov_zy index z, columns index y.
struct MomentTriple {
    Eigen::VectorXd mean_y;
    Eigen::MatrixXd cov_y;
    Eigen::MatrixXd cov_zy;
    /// Number of output variances that came out negative and were clamped to zero.
    int clamped_variances = 0;
    /// True when the softmax class means summed past one and were rescaled.
    bool mean_rescaled = false;
};

/// Diagonal jitter ladder used by every factorization in the library.
struct JitterPolicy {
    double initial = 1e-12;
    double maximum = 1e-6;
    double factor = 10.0;
    double symmetry_tol = 1e-10;
};

struct PsdRepair {
    Eigen::MatrixXd matrix;
    /// Jitter added to the diagonal; zero when the input was already PSD.
    double jitter = 0.0;
};

/// Symmetrizes m and lifts it onto the PSD cone with the smallest ladder jitter that works.
/// Throws NumericalError when the ladder is exhausted.
[[nodiscard]] PsdRepair ensure_psd(const Eigen::MatrixXd& m, const JitterPolicy& policy = {});

struct SpdSolve {
    Eigen::MatrixXd x;
    double jitter = 0.0;
};

/// Solves a x = b for symmetric positive definite a, escalating jitter on factorization failure.
[[nodiscard]] SpdSolve solve_spd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                 const JitterPolicy& policy = {});

/// Ratio of largest to smallest absolute eigenvalue (inf when singular).
[[nodiscard]] double condition_estimate(const Eigen::MatrixXd& m);

/// Pre-activation moments z_j = input . w_j with independent weight columns.
[[nodiscard]] GaussianDiag linear_propagate(const Eigen::VectorXd& input,
                                            const std::vector<WeightPosterior>& weights);

struct Conditioned {
    GaussianFull posterior;
    double solve_jitter = 0.0;
    double psd_jitter = 0.0;
};

/// Conditions z on an observation of y under a joint Gaussian model.
/// Innovations are column vectors: mean += cov_zy * cov_y^-1 * (y_obs - mean_y).
[[nodiscard]] Conditioned condition_joint(const GaussianDiag& z, const MomentTriple& moments,
                                          const Eigen::VectorXd& observed_y,
                                          const JitterPolicy& policy = {});

}  // namespace bnn
