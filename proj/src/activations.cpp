#include "bnn/activations.hpp"

#include "bnn/errors.hpp"
#include "bnn/normal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace bnn {

void PwlParams::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0 && beta >= alpha) || !std::isfinite(beta)) {
        throw ConfigError("piecewise-linear parameters need 0 <= alpha <= 1 and alpha <= beta");
    }
}

MomentTriple pwl_moments(const GaussianDiag& z, const PwlParams& p) {
    z.validate();
    p.validate();
    const auto n = static_cast<Eigen::Index>(z.size());
    MomentTriple out;
    out.mean_y.resize(n);
    out.cov_y = Eigen::MatrixXd::Zero(n, n);
    out.cov_zy = Eigen::MatrixXd::Zero(n, n);
    const double a = p.alpha;
    const double b = p.beta;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double mu = z.mean[j];
        const double sigma = std::sqrt(z.var[j]);
        double cdf = 0.0;
        double sig_pdf = 0.0;
        if (sigma > 0.0) {
            cdf = norm_cdf(mu / sigma);
            sig_pdf = sigma * norm_pdf(mu / sigma);
        } else {
            cdf = mu > 0.0 ? 1.0 : 0.0;
        }
        const double e1 = mu;
        const double e2 = mu * mu + z.var[j];
        const double mean = a * e1 + (b - a) * (e1 * cdf + sig_pdf);
        double var = a * a * e2 + (b * b - a * a) * (e2 * cdf + mu * sig_pdf) - mean * mean;
        if (var < 0.0) {
            if (var < -1e-10 * std::max(1.0, e2)) ++out.clamped_variances;
            var = 0.0;
        }
        out.mean_y[j] = mean;
        out.cov_y(j, j) = var;
        out.cov_zy(j, j) = a * e2 + (b - a) * (e2 * cdf + mu * sig_pdf) - mu * mean;
    }
    return out;
}

namespace {

Eigen::Index other_index(Eigen::Index t, Eigen::Index j) {
    return t < j ? t : t - 1;
}

struct ProbitPieces {
    Eigen::VectorXd means;
    Eigen::MatrixXd d;
};

ProbitPieces probit_pieces(const GaussianDiag& z, const ProbitConfig& cfg, bool with_means) {
    z.validate();
    const auto n = static_cast<Eigen::Index>(z.size());
    if (n < 2) throw ConfigError("softmax needs at least two classes");
    const double l2 = cfg.lambda * cfg.lambda;
    const Eigen::VectorXd scaled = l2 * z.var;
    ProbitPieces out{Eigen::VectorXd::Zero(n - 1), Eigen::MatrixXd::Zero(n, n)};
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        const Eigen::VectorXd u = std_limits(cfg, z.mean, z.var, sj);
        const CorrelationMatrix corr = std_correlation(cfg, scaled, sj);
        if (with_means && j < n - 1) out.means[j] = mvn_cdf(u, corr, cfg.mvn);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i == j) continue;
            const double partial =
                mvn_cdf_partial(u, corr, static_cast<std::size_t>(other_index(i, j)), cfg.mvn);
            out.d(j, i) = cfg.lambda / std::sqrt(1.0 + scaled[j] + scaled[i]) * partial;
        }
    }
    return out;
}

}  // namespace

SoftmaxDerivs softmax_deriv_expectations(const GaussianDiag& z, const ProbitConfig& cfg) {
    return {probit_pieces(z, cfg, false).d};
}

MomentTriple softmax_moments(const GaussianDiag& z, const ProbitConfig& cfg) {
    const ProbitPieces pieces = probit_pieces(z, cfg, true);
    const Eigen::MatrixXd& d = pieces.d;
    const auto n = static_cast<Eigen::Index>(z.size());
    const Eigen::Index k = n - 1;

    MomentTriple out;
    out.mean_y = pieces.means;
    const double total = out.mean_y.sum();
    if (total > 1.0) {
        out.mean_y /= total;
        out.mean_rescaled = true;
    }
    out.cov_y = Eigen::MatrixXd::Zero(k, k);
    out.cov_zy = Eigen::MatrixXd::Zero(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double mj = out.mean_y[j];
        const double row = d.row(j).sum();
        double var = mj - mj * mj - row;
        if (var < 0.0) {
            if (var < -1e-10) ++out.clamped_variances;
            var = 0.0;
        }
        out.cov_y(j, j) = var;
        for (Eigen::Index i = 0; i < j; ++i) {
            const double c = -out.mean_y[i] * mj + 0.5 * (d(j, i) + d(i, j));
            out.cov_y(i, j) = c;
            out.cov_y(j, i) = c;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            out.cov_zy(i, j) = i == j ? z.var[j] * row : -z.var[i] * d(j, i);
        }
    }
    return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
    const Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
    return e / e.sum();
}

std::vector<Eigen::VectorXd> default_calibration_grid(std::size_t n_classes, int points_per_axis, double half_width) {
    if (n_classes < 2) throw ConfigError("calibration needs at least two classes");
    if (points_per_axis < 1) throw ConfigError("calibration grid needs at least one point per axis");
    const auto dim = static_cast<Eigen::Index>(n_classes - 1);
    std::vector<double> axis(static_cast<std::size_t>(points_per_axis));
    for (int i = 0; i < points_per_axis; ++i) {
        axis[static_cast<std::size_t>(i)] =
            points_per_axis == 1 ? 0.0 : -half_width + 2.0 * half_width * i / (points_per_axis - 1);
    }
    std::vector<Eigen::VectorXd> grid;
    std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
    while (true) {
        Eigen::VectorXd p(dim);
        for (Eigen::Index d = 0; d < dim; ++d) p[d] = axis[idx[static_cast<std::size_t>(d)]];
        grid.push_back(std::move(p));
        std::size_t d = 0;
        while (d < idx.size() && ++idx[d] == axis.size()) idx[d++] = 0;
        if (d == idx.size()) break;
    }
    return grid;
}

double calibration_loss(const ProbitConfig& cfg, const std::vector<Eigen::VectorXd>& grid) {
    if (grid.empty()) throw ConfigError("calibration grid is empty");
    const CorrelationMatrix corr(cfg.rho);
    double sum = 0.0;
    for (const Eigen::VectorXd& theta : grid) {
        if (static_cast<std::size_t>(theta.size()) + 1 != cfg.classes()) {
            throw ConfigError("calibration point has the wrong dimension");
        }
        const double exact = 1.0 / (1.0 + (-theta.array()).exp().sum());
        const double approx = mvn_cdf(cfg.lambda * theta, corr, cfg.mvn);
        sum += (approx - exact) * (approx - exact);
    }
    return sum / static_cast<double>(grid.size());
}

namespace {

double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double g = 0.61803398874989484820;
    double a = lo;
    double b = hi;
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

ProbitConfig calibrate_probit(std::size_t n_classes, const std::vector<Eigen::VectorXd>& grid,
                              const CalibrationOptions& options) {
    ProbitConfig best = ProbitConfig::equicorrelated(n_classes);
    if (grid.empty()) throw ConfigError("calibration grid is empty");
    const bool informative = std::any_of(grid.begin(), grid.end(),
                                         [](const Eigen::VectorXd& t) { return t.cwiseAbs().maxCoeff() > 0.0; });
    if (!informative) return best;

    const std::size_t m = n_classes - 1;
    const bool fit_rho = m >= 2;
    const double rho_lo = m >= 3 ? -1.0 / static_cast<double>(m - 1) + 1e-3 : -0.99;
    double best_loss = calibration_loss(best, grid);

    auto with = [&](double lambda, double rho) {
        ProbitConfig cfg = ProbitConfig::equicorrelated(n_classes, lambda, fit_rho ? rho : kDefaultRho);
        cfg.mvn = best.mvn;
        return cfg;
    };
    double lambda = best.lambda;
    double rho = kDefaultRho;
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
        const double lambda0 = lambda;
        const double rho0 = rho;
        const double l = golden_section([&](double v) { return calibration_loss(with(v, rho), grid); },
                                        options.lambda_lo, options.lambda_hi, options.tol);
        const double loss_l = calibration_loss(with(l, rho), grid);
        if (loss_l <= best_loss) {
            lambda = l;
            best_loss = loss_l;
        }
        if (fit_rho) {
            const double r = golden_section([&](double v) { return calibration_loss(with(lambda, v), grid); },
                                            rho_lo, options.rho_hi, options.tol);
            const double loss_r = calibration_loss(with(lambda, r), grid);
            if (loss_r <= best_loss) {
                rho = r;
                best_loss = loss_r;
            }
        }
        if (std::abs(lambda - lambda0) <= 10.0 * options.tol && std::abs(rho - rho0) <= 10.0 * options.tol) {
            return with(lambda, rho);
        }
    }
    throw CalibrationError("probit calibration did not converge in " + std::to_string(options.max_sweeps) + " sweeps",
                           lambda, rho, best_loss);
}

}  // namespace bnn
