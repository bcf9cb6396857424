#include "bnn/gauss.hpp"

#include "bnn/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace bnn {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

bool is_symmetric(const Eigen::MatrixXd& m, double tol) {
    return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

// Eigenvalues at roundoff level below zero count as zero.
double psd_slack(const Eigen::VectorXd& eig) {
    const double scale = std::max(1.0, eig.cwiseAbs().maxCoeff());
    return 64.0 * std::numeric_limits<double>::epsilon() * scale;
}

}  // namespace

GaussianDiag::GaussianDiag(Eigen::VectorXd mean_, Eigen::VectorXd var_)
    : mean(std::move(mean_)), var(std::move(var_)) {
    validate();
}

void GaussianDiag::validate() const {
    if (mean.size() != var.size()) {
        throw ConfigError("gaussian mean has " + std::to_string(mean.size()) + " entries but var has " +
                          std::to_string(var.size()));
    }
    for (Eigen::Index j = 0; j < var.size(); ++j) {
        if (!std::isfinite(mean[j]) || !std::isfinite(var[j]) || var[j] < 0.0) {
            throw ConfigError("invalid gaussian coordinate " + std::to_string(j));
        }
    }
}

void WeightPosterior::validate(double symmetry_tol) const {
    if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
        throw ConfigError("weight covariance must be " + std::to_string(mean.size()) + "x" +
                          std::to_string(mean.size()));
    }
    if (!mean.allFinite() || !cov.allFinite()) throw ConfigError("weight posterior has non-finite entries");
    if (!is_symmetric(cov, symmetry_tol)) throw ConfigError("weight covariance is not symmetric");
}

double condition_estimate(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(m), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd a = es.eigenvalues().cwiseAbs();
    const double lo = a.minCoeff();
    if (lo == 0.0) return std::numeric_limits<double>::infinity();
    return a.maxCoeff() / lo;
}

PsdRepair ensure_psd(const Eigen::MatrixXd& m, const JitterPolicy& policy) {
    if (m.rows() != m.cols()) throw ConfigError("ensure_psd needs a square matrix");
    if (!m.allFinite()) throw NumericalError("matrix has non-finite entries", std::numeric_limits<double>::infinity());
    PsdRepair out{symmetrized(m), 0.0};
    if (m.size() == 0) return out;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.matrix, Eigen::EigenvaluesOnly);
    const double lowest = es.eigenvalues().minCoeff();
    if (lowest >= -psd_slack(es.eigenvalues())) return out;

    const auto n = out.matrix.rows();
    for (double eps = policy.initial; eps <= policy.maximum * (1.0 + 1e-9); eps *= policy.factor) {
        if (lowest + eps >= 0.0) {
            out.matrix += eps * Eigen::MatrixXd::Identity(n, n);
            out.jitter = eps;
            return out;
        }
    }
    throw NumericalError("matrix is indefinite (lowest eigenvalue " + std::to_string(lowest) +
                             ") beyond the jitter limit",
                         condition_estimate(out.matrix));
}

SpdSolve solve_spd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const JitterPolicy& policy) {
    if (a.rows() != a.cols() || a.rows() != b.rows()) throw ConfigError("solve_spd dimension mismatch");
    if (!a.allFinite() || !b.allFinite()) {
        throw NumericalError("solve_spd input has non-finite entries", std::numeric_limits<double>::infinity());
    }
    const Eigen::MatrixXd s = symmetrized(a);
    const auto n = s.rows();
    double eps = 0.0;
    while (true) {
        Eigen::LLT<Eigen::MatrixXd> llt(s + eps * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd x = llt.solve(b);
            if (x.allFinite()) return {std::move(x), eps};
        }
        eps = eps == 0.0 ? policy.initial : eps * policy.factor;
        if (eps > policy.maximum * (1.0 + 1e-9)) break;
    }
    throw NumericalError("covariance is singular beyond the jitter limit", condition_estimate(s));
}

GaussianDiag linear_propagate(const Eigen::VectorXd& input, const std::vector<WeightPosterior>& weights) {
    const auto n = static_cast<Eigen::Index>(weights.size());
    GaussianDiag out;
    out.mean.resize(n);
    out.var.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const WeightPosterior& w = weights[static_cast<std::size_t>(j)];
        if (w.mean.size() != input.size() || w.cov.rows() != input.size() || w.cov.cols() != input.size()) {
            throw ConfigError("input width " + std::to_string(input.size()) + " does not match weight column " +
                              std::to_string(j) + " of width " + std::to_string(w.mean.size()));
        }
        out.mean[j] = input.dot(w.mean);
        out.var[j] = std::max(0.0, input.dot(w.cov * input));
    }
    return out;
}

Conditioned condition_joint(const GaussianDiag& z, const MomentTriple& moments, const Eigen::VectorXd& observed_y,
                            const JitterPolicy& policy) {
    const auto n = static_cast<Eigen::Index>(z.size());
    const auto m = moments.mean_y.size();
    if (z.var.size() != n || moments.cov_y.rows() != m || moments.cov_y.cols() != m ||
        moments.cov_zy.rows() != n || moments.cov_zy.cols() != m || observed_y.size() != m) {
        throw ConfigError("condition_joint dimension mismatch");
    }
    const SpdSolve gain_t = solve_spd(moments.cov_y, moments.cov_zy.transpose(), policy);
    const Eigen::MatrixXd gain = gain_t.x.transpose();

    Conditioned out;
    out.solve_jitter = gain_t.jitter;
    out.posterior.mean = z.mean + gain * (observed_y - moments.mean_y);
    const Eigen::MatrixXd cov = Eigen::MatrixXd(z.var.asDiagonal()) - gain * moments.cov_zy.transpose();
    PsdRepair repaired = ensure_psd(cov, policy);
    out.posterior.cov = std::move(repaired.matrix);
    out.psd_jitter = repaired.jitter;
    return out;
}

}  // namespace bnn
