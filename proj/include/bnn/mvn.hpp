#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace bnn {

/// Symmetric PSD matrix with unit diagonal. Construction checks shape, symmetry and range;
/// positive semidefiniteness is checked where the matrix is factorized.
class CorrelationMatrix {
public:
    CorrelationMatrix() = default;
    explicit CorrelationMatrix(Eigen::MatrixXd entries, double tol = 1e-10);

    [[nodiscard]] const Eigen::MatrixXd& matrix() const { return entries_; }
    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
        return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    /// Unit diagonal with every off-diagonal equal to rho.
    [[nodiscard]] static CorrelationMatrix equicorrelated(std::size_t m, double rho);

private:
    Eigen::MatrixXd entries_;
};

struct MvnOptions {
    /// Seed of the randomized lattice shifts used for three or more dimensions.
    std::uint64_t seed = 0x6a09e667f3bcc909ULL;
    /// Absolute error target (three standard errors) for m <= 3 and m > 3.
    double abs_tol_low_dim = 1e-6;
    double abs_tol_high_dim = 1e-4;
    /// Number of independent random shifts per lattice size.
    int shifts = 12;
    std::size_t min_points = 256;
    std::size_t max_points = 1u << 20;
};

/// Bivariate standard normal CDF P(X <= h, Y <= k) with correlation rho.
[[nodiscard]] double bvn_cdf(double h, double k, double rho);

/// P(T <= upper) for T ~ N(0, corr). Limits may be +-infinity. Result is clamped to [0, 1].
/// Throws NumericalError when corr is not PSD.
[[nodiscard]] double mvn_cdf(const Eigen::VectorXd& upper, const CorrelationMatrix& corr,
                             const MvnOptions& options = {});

/// Partial derivative of mvn_cdf with respect to upper[i].
[[nodiscard]] double mvn_cdf_partial(const Eigen::VectorXd& upper, const CorrelationMatrix& corr,
                                     std::size_t i, const MvnOptions& options = {});

}  // namespace bnn
