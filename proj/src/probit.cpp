#include "bnn/probit.hpp"

#include "bnn/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace bnn {

void ProbitConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("probit lambda must be positive");
    if (rho.rows() != rho.cols() || rho.rows() < 1) throw ConfigError("probit rho must be a non-empty square matrix");
    for (Eigen::Index i = 0; i < rho.rows(); ++i) {
        if (rho(i, i) != 1.0) throw ConfigError("probit rho needs a unit diagonal");
        for (Eigen::Index j = 0; j < i; ++j) {
            if (rho(i, j) != rho(j, i)) throw ConfigError("probit rho is not symmetric");
            if (!(std::abs(rho(i, j)) < 1.0)) throw ConfigError("probit rho entries must lie in (-1, 1)");
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12) throw ConfigError("probit rho is not positive semidefinite");
}

ProbitConfig ProbitConfig::equicorrelated(std::size_t n_classes, double lambda, double rho) {
    if (n_classes < 2) throw ConfigError("a probit config needs at least two classes");
    const auto m = static_cast<Eigen::Index>(n_classes - 1);
    ProbitConfig cfg;
    cfg.lambda = lambda;
    cfg.rho = Eigen::MatrixXd::Constant(m, m, rho);
    cfg.rho.diagonal().setOnes();
    cfg.validate();
    return cfg;
}

namespace {

void check_class(const ProbitConfig& cfg, std::size_t n, std::size_t j) {
    if (n < 2) throw ConfigError("softmax needs at least two classes");
    if (j >= n) throw ConfigError("class index " + std::to_string(j) + " out of range for " + std::to_string(n) + " classes");
    if (cfg.classes() != n) {
        throw ConfigError("probit config serves " + std::to_string(cfg.classes()) + " classes, got " + std::to_string(n));
    }
}

// Position of class t among the n - 1 classes other than j.
Eigen::Index shifted(std::size_t t, std::size_t j) {
    return static_cast<Eigen::Index>(t < j ? t : t - 1);
}

}  // namespace

CorrelationMatrix std_correlation(const ProbitConfig& cfg, const Eigen::VectorXd& scaled_var, std::size_t j) {
    const auto n = static_cast<std::size_t>(scaled_var.size());
    check_class(cfg, n, j);
    const auto m = static_cast<Eigen::Index>(n - 1);
    const double vj = scaled_var[static_cast<Eigen::Index>(j)];
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(m, m);
    for (std::size_t t = 0; t < n; ++t) {
        if (t == j) continue;
        for (std::size_t u = 0; u < t; ++u) {
            if (u == j) continue;
            const Eigen::Index a = shifted(t, j);
            const Eigen::Index b = shifted(u, j);
            const double num = cfg.rho(a, b) + vj;
            const double den = std::sqrt((1.0 + vj + scaled_var[static_cast<Eigen::Index>(t)]) *
                                         (1.0 + vj + scaled_var[static_cast<Eigen::Index>(u)]));
            out(a, b) = num / den;
            out(b, a) = out(a, b);
        }
    }
    return CorrelationMatrix(std::move(out));
}

Eigen::VectorXd std_limits(const ProbitConfig& cfg, const Eigen::VectorXd& mu_z, const Eigen::VectorXd& var_z,
                           std::size_t j) {
    const auto n = static_cast<std::size_t>(mu_z.size());
    if (var_z.size() != mu_z.size()) throw ConfigError("mean and variance lengths differ");
    check_class(cfg, n, j);
    const double l2 = cfg.lambda * cfg.lambda;
    const auto jj = static_cast<Eigen::Index>(j);
    Eigen::VectorXd u(static_cast<Eigen::Index>(n - 1));
    for (std::size_t t = 0; t < n; ++t) {
        if (t == j) continue;
        const auto tt = static_cast<Eigen::Index>(t);
        u[shifted(t, j)] = cfg.lambda * (mu_z[jj] - mu_z[tt]) / std::sqrt(1.0 + l2 * var_z[jj] + l2 * var_z[tt]);
    }
    return u;
}

double gaussian_probit_integral(const Eigen::VectorXd& mu_z, const Eigen::VectorXd& var_z, const ProbitConfig& cfg,
                                std::size_t j) {
    const Eigen::VectorXd u = std_limits(cfg, mu_z, var_z, j);
    const Eigen::VectorXd scaled = cfg.lambda * cfg.lambda * var_z;
    return mvn_cdf(u, std_correlation(cfg, scaled, j), cfg.mvn);
}

}  // namespace bnn
