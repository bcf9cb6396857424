#include "oracle.hpp"

#include "bnn/normal.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <utility>
#include <vector>

namespace bnn::oracle {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::size_t kChunk = 1u << 14;

// Sums f(k, acc) over k in [0, samples) with a fixed chunking so the result does not
// depend on the thread count.
template <class F>
std::vector<double> parallel_sum(std::size_t samples, std::size_t width, const F& f) {
    const std::size_t chunks = (samples + kChunk - 1) / kChunk;
    std::vector<std::vector<double>> partial(chunks, std::vector<double>(width, 0.0));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c = next++; c < chunks; c = next++) {
            const std::size_t end = std::min(samples, (c + 1) * kChunk);
            for (std::size_t k = c * kChunk; k < end; ++k) f(k, partial[c].data());
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 16u));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    std::vector<double> total(width, 0.0);
    for (const auto& p : partial) {
        for (std::size_t i = 0; i < width; ++i) total[i] += p[i];
    }
    return total;
}

struct Pair {
    std::size_t a;
    std::size_t b;
};

struct Stats {
    std::vector<double> mean;
    std::vector<double> se_mean;
    std::vector<double> cov;
    std::vector<double> se_cov;
};

// Two-pass moments of a sampled vector: means first, then centered products.
template <class S>
Stats sample_stats(std::size_t width, const std::vector<Pair>& pairs, std::size_t n, const S& sample) {
    const double dn = static_cast<double>(n);
    const std::vector<double> sums = parallel_sum(n, width, [&](std::size_t k, double* acc) {
        thread_local std::vector<double> v;
        v.resize(width);
        sample(k, v.data());
        for (std::size_t i = 0; i < width; ++i) acc[i] += v[i];
    });
    Stats s;
    s.mean.resize(width);
    for (std::size_t i = 0; i < width; ++i) s.mean[i] = sums[i] / dn;

    const std::size_t np = pairs.size();
    const std::vector<double> second = parallel_sum(n, width + 2 * np, [&](std::size_t k, double* acc) {
        thread_local std::vector<double> v;
        v.resize(width);
        sample(k, v.data());
        for (std::size_t i = 0; i < width; ++i) {
            const double c = v[i] - s.mean[i];
            acc[i] += c * c;
        }
        for (std::size_t p = 0; p < np; ++p) {
            const double c = (v[pairs[p].a] - s.mean[pairs[p].a]) * (v[pairs[p].b] - s.mean[pairs[p].b]);
            acc[width + 2 * p] += c;
            acc[width + 2 * p + 1] += c * c;
        }
    });
    s.se_mean.resize(width);
    for (std::size_t i = 0; i < width; ++i) s.se_mean[i] = std::sqrt(second[i] / dn / dn);
    s.cov.resize(np);
    s.se_cov.resize(np);
    for (std::size_t p = 0; p < np; ++p) {
        const double m1 = second[width + 2 * p] / dn;
        const double m2 = second[width + 2 * p + 1] / dn;
        s.cov[p] = m1;
        s.se_cov[p] = std::sqrt(std::max(0.0, m2 - m1 * m1) / dn);
    }
    return s;
}

McEstimate bernoulli_or_mean(const std::vector<double>& sums, std::size_t n) {
    const double dn = static_cast<double>(n);
    const double m = sums[0] / dn;
    const double var = std::max(0.0, sums[1] / dn - m * m);
    return {m, std::sqrt(var / dn)};
}

// Lower factor of a PSD matrix that tolerates singular directions.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t index) : key_(mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL))) {}

std::uint64_t CounterRng::next() {
    return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
}

double CounterRng::uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 6.28318530717958647692 * uniform();
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
}

McMoments mc_softmax_moments(const Eigen::VectorXd& mu_z, const Eigen::VectorXd& var_z, const McConfig& cfg) {
    const auto n = static_cast<std::size_t>(mu_z.size());
    const std::size_t k = n - 1;
    const std::size_t width = k + n;
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) pairs.push_back({i, j});
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) pairs.push_back({k + i, j});
    }
    const Eigen::VectorXd sd = var_z.cwiseSqrt();
    const Stats s = sample_stats(width, pairs, cfg.samples, [&](std::size_t idx, double* v) {
        CounterRng rng(cfg.seed, idx);
        Eigen::VectorXd z(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            z[ii] = mu_z[ii] + sd[ii] * rng.normal();
        }
        const Eigen::VectorXd y = softmax(z);
        for (std::size_t i = 0; i < k; ++i) v[i] = y[static_cast<Eigen::Index>(i)];
        for (std::size_t i = 0; i < n; ++i) v[k + i] = z[static_cast<Eigen::Index>(i)];
    });

    McMoments out;
    const auto kk = static_cast<Eigen::Index>(k);
    const auto nn = static_cast<Eigen::Index>(n);
    out.moments.mean_y.resize(kk);
    out.se_mean.resize(kk);
    out.moments.cov_y.resize(kk, kk);
    out.se_cov_y.resize(kk, kk);
    out.moments.cov_zy.resize(nn, kk);
    out.se_cov_zy.resize(nn, kk);
    for (Eigen::Index i = 0; i < kk; ++i) {
        out.moments.mean_y[i] = s.mean[static_cast<std::size_t>(i)];
        out.se_mean[i] = s.se_mean[static_cast<std::size_t>(i)];
    }
    std::size_t p = 0;
    for (Eigen::Index i = 0; i < kk; ++i) {
        for (Eigen::Index j = 0; j < kk; ++j, ++p) {
            out.moments.cov_y(i, j) = s.cov[p];
            out.se_cov_y(i, j) = s.se_cov[p];
        }
    }
    for (Eigen::Index i = 0; i < nn; ++i) {
        for (Eigen::Index j = 0; j < kk; ++j, ++p) {
            out.moments.cov_zy(i, j) = s.cov[p];
            out.se_cov_zy(i, j) = s.se_cov[p];
        }
    }
    return out;
}

McMoments mc_pwl_moments(const Eigen::VectorXd& mu_z, const Eigen::VectorXd& var_z, const PwlParams& p,
                         const McConfig& cfg) {
    const auto n = static_cast<std::size_t>(mu_z.size());
    std::vector<Pair> pairs;
    for (std::size_t j = 0; j < n; ++j) {
        pairs.push_back({j, j});
        pairs.push_back({n + j, j});
    }
    const Eigen::VectorXd sd = var_z.cwiseSqrt();
    const Stats s = sample_stats(2 * n, pairs, cfg.samples, [&](std::size_t idx, double* v) {
        CounterRng rng(cfg.seed, idx);
        for (std::size_t j = 0; j < n; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const double z = mu_z[jj] + sd[jj] * rng.normal();
            v[j] = p(z);
            v[n + j] = z;
        }
    });
    McMoments out;
    const auto nn = static_cast<Eigen::Index>(n);
    out.moments.mean_y.resize(nn);
    out.se_mean.resize(nn);
    out.moments.cov_y = Eigen::MatrixXd::Zero(nn, nn);
    out.se_cov_y = Eigen::MatrixXd::Zero(nn, nn);
    out.moments.cov_zy = Eigen::MatrixXd::Zero(nn, nn);
    out.se_cov_zy = Eigen::MatrixXd::Zero(nn, nn);
    for (std::size_t j = 0; j < n; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        out.moments.mean_y[jj] = s.mean[j];
        out.se_mean[jj] = s.se_mean[j];
        out.moments.cov_y(jj, jj) = s.cov[2 * j];
        out.se_cov_y(jj, jj) = s.se_cov[2 * j];
        out.moments.cov_zy(jj, jj) = s.cov[2 * j + 1];
        out.se_cov_zy(jj, jj) = s.se_cov[2 * j + 1];
    }
    return out;
}

McEstimate mc_probit_integral(const Eigen::VectorXd& mu_z, const Eigen::VectorXd& var_z, const ProbitConfig& probit,
                              std::size_t j, const McConfig& cfg) {
    const auto n = mu_z.size();
    const auto jj = static_cast<Eigen::Index>(j);
    const Eigen::MatrixXd l = psd_factor(probit.rho);
    const Eigen::VectorXd sd = var_z.cwiseSqrt();
    const std::vector<double> sums = parallel_sum(cfg.samples, 2, [&](std::size_t idx, double* acc) {
        CounterRng rng(cfg.seed, idx);
        Eigen::VectorXd z(n);
        for (Eigen::Index i = 0; i < n; ++i) z[i] = mu_z[i] + sd[i] * rng.normal();
        Eigen::VectorXd e(n - 1);
        for (Eigen::Index i = 0; i < n - 1; ++i) e[i] = rng.normal();
        const Eigen::VectorXd u = l * e;
        bool inside = true;
        for (Eigen::Index t = 0, a = 0; t < n; ++t) {
            if (t == jj) continue;
            if (u[a++] > probit.lambda * (z[jj] - z[t])) inside = false;
        }
        if (inside) {
            acc[0] += 1.0;
            acc[1] += 1.0;
        }
    });
    return bernoulli_or_mean(sums, cfg.samples);
}

McEstimate mc_probit_partial(const Eigen::VectorXd& mu_z, const Eigen::VectorXd& var_z, const ProbitConfig& probit,
                             std::size_t j, std::size_t i, const McConfig& cfg) {
    const auto n = mu_z.size();
    const auto jj = static_cast<Eigen::Index>(j);
    const auto ii = static_cast<Eigen::Index>(i);
    const Eigen::Index a = ii < jj ? ii : ii - 1;
    const Eigen::Index m = n - 1;
    // Conditional law of the remaining probit coordinates given coordinate a.
    std::vector<Eigen::Index> rest;
    for (Eigen::Index t = 0; t < m; ++t) {
        if (t != a) rest.push_back(t);
    }
    const auto r = static_cast<Eigen::Index>(rest.size());
    Eigen::VectorXd slope(r);
    Eigen::MatrixXd cond(r, r);
    for (Eigen::Index p = 0; p < r; ++p) {
        slope[p] = probit.rho(rest[static_cast<std::size_t>(p)], a);
        for (Eigen::Index q = 0; q < r; ++q) {
            cond(p, q) = probit.rho(rest[static_cast<std::size_t>(p)], rest[static_cast<std::size_t>(q)]) -
                         probit.rho(rest[static_cast<std::size_t>(p)], a) * probit.rho(rest[static_cast<std::size_t>(q)], a);
        }
    }
    const Eigen::MatrixXd l = r > 0 ? psd_factor(cond) : Eigen::MatrixXd();
    const Eigen::VectorXd sd = var_z.cwiseSqrt();
    const std::vector<double> sums = parallel_sum(cfg.samples, 2, [&](std::size_t idx, double* acc) {
        CounterRng rng(cfg.seed, idx);
        Eigen::VectorXd z(n);
        for (Eigen::Index t = 0; t < n; ++t) z[t] = mu_z[t] + sd[t] * rng.normal();
        Eigen::VectorXd x(m);
        for (Eigen::Index t = 0, b = 0; t < n; ++t) {
            if (t != jj) x[b++] = probit.lambda * (z[jj] - z[t]);
        }
        bool inside = true;
        if (r > 0) {
            Eigen::VectorXd e(r);
            for (Eigen::Index p = 0; p < r; ++p) e[p] = rng.normal();
            const Eigen::VectorXd u = slope * x[a] + l * e;
            for (Eigen::Index p = 0; p < r; ++p) {
                if (u[p] > x[rest[static_cast<std::size_t>(p)]]) inside = false;
            }
        }
        if (inside) {
            const double v = norm_pdf(x[a]);
            acc[0] += v;
            acc[1] += v * v;
        }
    });
    return bernoulli_or_mean(sums, cfg.samples);
}

McEstimate mc_mvn_cdf(const Eigen::VectorXd& upper, const Eigen::MatrixXd& corr, const McConfig& cfg) {
    const Eigen::MatrixXd l = psd_factor(corr);
    const auto m = upper.size();
    const std::vector<double> sums = parallel_sum(cfg.samples, 2, [&](std::size_t idx, double* acc) {
        CounterRng rng(cfg.seed, idx);
        Eigen::VectorXd e(m);
        for (Eigen::Index i = 0; i < m; ++i) e[i] = rng.normal();
        const Eigen::VectorXd t = l * e;
        if ((t.array() <= upper.array()).all()) {
            acc[0] += 1.0;
            acc[1] += 1.0;
        }
    });
    return bernoulli_or_mean(sums, cfg.samples);
}

McForward mc_forward(const NetworkState& net, const Eigen::VectorXd& x, const McConfig& cfg) {
    std::vector<std::vector<Eigen::MatrixXd>> factors;
    for (const auto& layer : net.posteriors) {
        std::vector<Eigen::MatrixXd> f;
        for (const WeightPosterior& w : layer) f.push_back(psd_factor(w.cov));
        factors.push_back(std::move(f));
    }
    const std::size_t k = net.classes() - 1;
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) pairs.push_back({i, j});
    }
    const Stats s = sample_stats(k, pairs, cfg.samples, [&](std::size_t idx, double* v) {
        CounterRng rng(cfg.seed, idx);
        Eigen::VectorXd a = x;
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            Eigen::VectorXd input = a;
            if (net.layers[l].bias) {
                input.resize(a.size() + 1);
                input << a, 1.0;
            }
            Eigen::VectorXd z(static_cast<Eigen::Index>(net.layers[l].width));
            for (std::size_t j = 0; j < net.layers[l].width; ++j) {
                const WeightPosterior& w = net.posteriors[l][j];
                Eigen::VectorXd e(w.mean.size());
                for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = rng.normal();
                z[static_cast<Eigen::Index>(j)] = input.dot(w.mean + factors[l][j] * e);
            }
            if (net.layers[l].activation.kind == Activation::Kind::pwl) {
                a = z.unaryExpr([&](double t) { return net.layers[l].activation.pwl(t); });
            } else {
                a = softmax(z);
            }
        }
        for (std::size_t i = 0; i < k; ++i) v[i] = a[static_cast<Eigen::Index>(i)];
    });
    McForward out;
    const auto kk = static_cast<Eigen::Index>(k);
    out.mean.resize(kk);
    out.se_mean.resize(kk);
    out.cov.resize(kk, kk);
    for (Eigen::Index i = 0; i < kk; ++i) {
        out.mean[i] = s.mean[static_cast<std::size_t>(i)];
        out.se_mean[i] = s.se_mean[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < kk; ++j) out.cov(i, j) = s.cov[static_cast<std::size_t>(i * kk + j)];
    }
    return out;
}

}  // namespace bnn::oracle
