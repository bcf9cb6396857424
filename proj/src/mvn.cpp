#include "bnn/mvn.hpp"

#include "bnn/errors.hpp"
#include "bnn/normal.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace bnn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kDegenerate = 1e-12;

struct Factor {
    Eigen::VectorXd b;
    Eigen::MatrixXd l;
};

// Pivoted Cholesky that orders variables by increasing expected conditional probability,
// which concentrates the integrand variation in the first coordinates.
Factor prioritized_cholesky(const Eigen::VectorXd& upper, const Eigen::MatrixXd& corr) {
    const Eigen::Index m = upper.size();
    Eigen::VectorXd b = upper;
    Eigen::MatrixXd r = corr;
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

    for (Eigen::Index k = 0; k < m; ++k) {
        Eigen::Index best = -1;
        double best_prob = kInf;
        for (Eigen::Index i = k; i < m; ++i) {
            const double v = r(i, i) - l.row(i).head(k).squaredNorm();
            if (v <= kDegenerate) continue;
            const double t = (b[i] - l.row(i).head(k).dot(y.head(k))) / std::sqrt(v);
            const double p = norm_cdf(t);
            if (p < best_prob) {
                best_prob = p;
                best = i;
            }
        }
        if (best < 0) best = k;
        if (best != k) {
            std::swap(b[k], b[best]);
            r.row(k).swap(r.row(best));
            r.col(k).swap(r.col(best));
            l.row(k).swap(l.row(best));
        }
        const double v = r(k, k) - l.row(k).head(k).squaredNorm();
        if (v < -1e-10) {
            throw NumericalError("correlation matrix is not positive semidefinite", kInf);
        }
        if (v <= kDegenerate) {
            for (Eigen::Index i = k + 1; i < m; ++i) {
                const double resid = r(i, k) - l.row(i).head(k).dot(l.row(k).head(k));
                if (std::abs(resid) > 1e-6) {
                    throw NumericalError("correlation matrix is not positive semidefinite", kInf);
                }
            }
            y[k] = 0.0;
            continue;
        }
        const double lkk = std::sqrt(v);
        l(k, k) = lkk;
        for (Eigen::Index i = k + 1; i < m; ++i) {
            l(i, k) = (r(i, k) - l.row(i).head(k).dot(l.row(k).head(k))) / lkk;
        }
        const double t = (b[k] - l.row(k).head(k).dot(y.head(k))) / lkk;
        const double p = norm_cdf(t);
        y[k] = p > 1e-300 ? -norm_pdf(t) / p : t;
    }
    return {std::move(b), std::move(l)};
}

// Separation-of-variables integrand on the unit cube of dimension m - 1.
double genz_integrand(const Factor& f, const double* w, std::vector<double>& y) {
    const Eigen::Index m = f.b.size();
    double value = 1.0;
    for (Eigen::Index k = 0; k < m; ++k) {
        double t = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) t += f.l(k, j) * y[static_cast<std::size_t>(j)];
        const double lkk = f.l(k, k);
        if (lkk == 0.0) {
            if (t > f.b[k]) return 0.0;
            y[static_cast<std::size_t>(k)] = 0.0;
            continue;
        }
        const double e = norm_cdf((f.b[k] - t) / lkk);
        value *= e;
        if (value == 0.0) return 0.0;
        if (k + 1 < m) {
            const double q = std::clamp(w[k] * e, 1e-300, 1.0 - 1e-16);
            y[static_cast<std::size_t>(k)] = norm_quantile(q);
        }
    }
    return value;
}

std::vector<double> richtmyer_generator(std::size_t dim) {
    std::vector<double> gen;
    for (std::uint64_t c = 2; gen.size() < dim; ++c) {
        bool prime = true;
        for (std::uint64_t d = 2; d * d <= c; ++d) {
            if (c % d == 0) {
                prime = false;
                break;
            }
        }
        if (prime) {
            const double s = std::sqrt(static_cast<double>(c));
            gen.push_back(s - std::floor(s));
        }
    }
    return gen;
}

double genz_cdf(const Eigen::VectorXd& upper, const Eigen::MatrixXd& corr, const MvnOptions& opt, double tol) {
    const Factor f = prioritized_cholesky(upper, corr);
    const std::size_t dim = static_cast<std::size_t>(upper.size()) - 1;
    const std::vector<double> gen = richtmyer_generator(dim);
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> x(dim), xa(dim), y(dim + 1), shift(dim);

    double estimate = 0.0;
    for (std::size_t n = opt.min_points;; n *= 2) {
        double sum = 0.0;
        double sum_sq = 0.0;
        for (int q = 0; q < opt.shifts; ++q) {
            for (auto& s : shift) s = unit(rng);
            double acc = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                for (std::size_t d = 0; d < dim; ++d) {
                    double u = static_cast<double>(j) * gen[d] + shift[d];
                    u -= std::floor(u);
                    u = std::abs(2.0 * u - 1.0);
                    x[d] = u;
                    xa[d] = 1.0 - u;
                }
                acc += 0.5 * (genz_integrand(f, x.data(), y) + genz_integrand(f, xa.data(), y));
            }
            const double mean_q = acc / static_cast<double>(n);
            sum += mean_q;
            sum_sq += mean_q * mean_q;
        }
        const double shifts = static_cast<double>(opt.shifts);
        estimate = sum / shifts;
        const double var = std::max(0.0, (sum_sq - shifts * estimate * estimate) / (shifts * (shifts - 1.0)));
        if (3.0 * std::sqrt(var) <= tol || n >= opt.max_points) break;
    }
    return estimate;
}

void check_psd(const Eigen::MatrixXd& corr) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) {
        throw NumericalError("correlation matrix is not positive semidefinite",
                             es.eigenvalues().cwiseAbs().maxCoeff() / std::max(1e-300, es.eigenvalues().cwiseAbs().minCoeff()));
    }
}

}  // namespace

CorrelationMatrix::CorrelationMatrix(Eigen::MatrixXd entries, double tol) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols()) throw ConfigError("correlation matrix must be square");
    for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
        if (std::abs(entries_(i, i) - 1.0) > tol) throw ConfigError("correlation matrix needs a unit diagonal");
        entries_(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double a = entries_(i, j);
            if (!std::isfinite(a) || std::abs(a - entries_(j, i)) > tol || std::abs(a) > 1.0 + tol) {
                throw ConfigError("invalid correlation entry (" + std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            const double c = std::clamp(0.5 * (a + entries_(j, i)), -1.0, 1.0);
            entries_(i, j) = c;
            entries_(j, i) = c;
        }
    }
}

CorrelationMatrix CorrelationMatrix::equicorrelated(std::size_t m, double rho) {
    const auto n = static_cast<Eigen::Index>(m);
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(n, n, rho);
    r.diagonal().setOnes();
    return CorrelationMatrix(std::move(r));
}

double bvn_cdf(double h, double k, double rho) {
    if (std::isnan(h) || std::isnan(k) || std::isnan(rho)) return std::numeric_limits<double>::quiet_NaN();
    if (h == -kInf || k == -kInf) return 0.0;
    if (h == kInf) return norm_cdf(k);
    if (k == kInf) return norm_cdf(h);
    if (rho >= 1.0) return norm_cdf(std::min(h, k));
    if (rho <= -1.0) return std::max(0.0, norm_cdf(h) - norm_cdf(-k));

    const double hk = h * k;
    const double hh = h * h + k * k;
    auto integrand = [&](double theta) {
        const double s = std::sin(theta);
        const double c2 = 1.0 - s * s;
        if (c2 <= 0.0) return 0.0;
        return std::exp(-(hh - 2.0 * hk * s) / (2.0 * c2));
    };
    const double upper = std::asin(rho);
    double err = 0.0;
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, upper, 15, 1e-14, &err);
    return std::clamp(norm_cdf(h) * norm_cdf(k) + integral / kTwoPi, 0.0, 1.0);
}

double mvn_cdf(const Eigen::VectorXd& upper, const CorrelationMatrix& corr, const MvnOptions& options) {
    const auto m = upper.size();
    if (static_cast<std::size_t>(m) != corr.size()) {
        throw ConfigError("upper limit length " + std::to_string(m) + " does not match correlation size " +
                          std::to_string(corr.size()));
    }
    if (m >= 3) check_psd(corr.matrix());

    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::isnan(upper[i])) throw ConfigError("upper limit is NaN");
        if (upper[i] == -kInf) return 0.0;
        if (upper[i] != kInf) keep.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(keep.size());
    if (k == 0) return 1.0;
    if (k == 1) return norm_cdf(upper[keep[0]]);
    if (k == 2) return bvn_cdf(upper[keep[0]], upper[keep[1]], corr.matrix()(keep[0], keep[1]));

    Eigen::VectorXd b(k);
    Eigen::MatrixXd r(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        b[i] = upper[keep[static_cast<std::size_t>(i)]];
        for (Eigen::Index j = 0; j < k; ++j) {
            r(i, j) = corr.matrix()(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
        }
    }
    const double tol = k <= 3 ? options.abs_tol_low_dim : options.abs_tol_high_dim;
    return std::clamp(genz_cdf(b, r, options, tol), 0.0, 1.0);
}

double mvn_cdf_partial(const Eigen::VectorXd& upper, const CorrelationMatrix& corr, std::size_t i,
                       const MvnOptions& options) {
    const auto m = upper.size();
    if (static_cast<std::size_t>(m) != corr.size()) throw ConfigError("upper limit length does not match correlation size");
    if (i >= static_cast<std::size_t>(m)) throw ConfigError("partial index " + std::to_string(i) + " out of range");
    if (m >= 3) check_psd(corr.matrix());
    const auto ii = static_cast<Eigen::Index>(i);
    const double xi = upper[ii];
    if (!std::isfinite(xi)) return 0.0;

    double gate = 1.0;
    std::vector<Eigen::Index> rest;
    std::vector<double> cond_upper;
    std::vector<double> scale;
    for (Eigen::Index k = 0; k < m; ++k) {
        if (k == ii) continue;
        const double r = corr.matrix()(k, ii);
        const double s2 = 1.0 - r * r;
        if (s2 <= 1e-14) {
            // Coordinate k equals r * x_i almost surely.
            if (r * xi > upper[k]) gate = 0.0;
            continue;
        }
        rest.push_back(k);
        scale.push_back(std::sqrt(s2));
        cond_upper.push_back(upper[k] == kInf ? kInf : (upper[k] - r * xi) / std::sqrt(s2));
    }
    if (gate == 0.0) return 0.0;

    const auto c = static_cast<Eigen::Index>(rest.size());
    Eigen::VectorXd b(c);
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(c, c);
    for (Eigen::Index a = 0; a < c; ++a) {
        const auto sa = static_cast<std::size_t>(a);
        b[a] = cond_upper[sa];
        for (Eigen::Index bb = 0; bb < a; ++bb) {
            const auto sb = static_cast<std::size_t>(bb);
            const double v = (corr.matrix()(rest[sa], rest[sb]) -
                              corr.matrix()(rest[sa], ii) * corr.matrix()(rest[sb], ii)) /
                             (scale[sa] * scale[sb]);
            r(a, bb) = std::clamp(v, -1.0, 1.0);
            r(bb, a) = r(a, bb);
        }
    }
    return norm_pdf(xi) * mvn_cdf(b, CorrelationMatrix(std::move(r), 1e-8), options);
}

}  // namespace bnn
