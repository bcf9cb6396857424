#include "bnn/network.hpp"

#include "bnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace bnn {

std::size_t NetworkState::fan_in(std::size_t l) const {
    const std::size_t prev = l == 0 ? input_width : layers[l - 1].width;
    return prev + (layers[l].bias ? 1 : 0);
}

void NetworkState::validate() const {
    if (input_width == 0) throw ConfigError("network input width must be positive");
    if (layers.empty()) throw ConfigError("network needs at least one layer");
    if (posteriors.size() != layers.size()) throw ConfigError("one posterior list per layer is required");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const LayerSpec& spec = layers[l];
        const bool last = l + 1 == layers.size();
        if (spec.width == 0) throw ConfigError("layer " + std::to_string(l) + " has zero width");
        if (last && spec.activation.kind != Activation::Kind::softmax) {
            throw ConfigError("the last layer must be softmax");
        }
        if (!last && spec.activation.kind != Activation::Kind::pwl) {
            throw ConfigError("hidden layer " + std::to_string(l) + " must be piecewise-linear");
        }
        if (spec.activation.kind == Activation::Kind::pwl) spec.activation.pwl.validate();
        if (posteriors[l].size() != spec.width) {
            throw ConfigError("layer " + std::to_string(l) + " needs " + std::to_string(spec.width) + " weight columns");
        }
        for (const WeightPosterior& w : posteriors[l]) {
            if (w.size() != fan_in(l)) {
                throw ConfigError("layer " + std::to_string(l) + " weight column must have " + std::to_string(fan_in(l)) +
                                  " entries");
            }
            w.validate();
        }
    }
    if (layers.back().width < 2) throw ConfigError("softmax layer needs at least two classes");
    probit.validate();
    if (probit.classes() != layers.back().width) throw ConfigError("probit config does not match the class count");
}

NetworkState NetworkState::isotropic(std::size_t input_width, std::vector<LayerSpec> layers, double prior_var,
                                     double mean) {
    NetworkState net;
    net.input_width = input_width;
    net.layers = std::move(layers);
    if (net.layers.empty()) throw ConfigError("network needs at least one layer");
    net.probit = ProbitConfig::equicorrelated(net.layers.back().width);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto k = static_cast<Eigen::Index>(net.fan_in(l));
        net.posteriors.emplace_back(net.layers[l].width,
                                    WeightPosterior{Eigen::VectorXd::Constant(k, mean),
                                                    prior_var * Eigen::MatrixXd::Identity(k, k)});
    }
    net.validate();
    return net;
}

ForwardTrace forward(const NetworkState& net, const Eigen::VectorXd& x) {
    if (x.size() == 0 || static_cast<std::size_t>(x.size()) != net.input_width) {
        throw ConfigError("input has " + std::to_string(x.size()) + " features, network expects " +
                          std::to_string(net.input_width));
    }
    ForwardTrace trace;
    trace.reserve(net.layers.size());
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        LayerTrace t;
        if (net.layers[l].bias) {
            t.input.resize(a.size() + 1);
            t.input << a, 1.0;
        } else {
            t.input = a;
        }
        t.z = linear_propagate(t.input, net.posteriors[l]);
        if (net.layers[l].activation.kind == Activation::Kind::pwl) {
            t.moments = pwl_moments(t.z, net.layers[l].activation.pwl);
        } else {
            t.moments = softmax_moments(t.z, net.probit);
        }
        t.y = t.moments.mean_y;
        a = t.y;
        trace.push_back(std::move(t));
    }
    return trace;
}

namespace {

void check_observation(const NetworkState& net, const Eigen::VectorXd& y_obs) {
    if (static_cast<std::size_t>(y_obs.size()) + 1 != net.classes()) {
        throw ConfigError("observation must have " + std::to_string(net.classes() - 1) + " entries");
    }
    int ones = 0;
    for (Eigen::Index i = 0; i < y_obs.size(); ++i) {
        if (y_obs[i] == 1.0) {
            ++ones;
        } else if (y_obs[i] != 0.0) {
            throw ConfigError("observation entries must be 0 or 1");
        }
    }
    if (ones > 1) throw ConfigError("observation has more than one active class");
}

// Per-neuron weight update from the prior and conditioned pre-activation moments.
void update_layer(std::vector<WeightPosterior>& weights, const LayerTrace& t, const GaussianFull& z_post,
                  const UpdateOptions& options, UpdateDiagnostics& diag) {
    for (std::size_t j = 0; j < weights.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        WeightPosterior& w = weights[j];
        const Eigen::VectorXd s = w.cov * t.input;
        const double var = std::max(t.z.var[jj], options.variance_floor);
        const double shrink = std::min(0.0, z_post.cov(jj, jj) - t.z.var[jj]);
        w.mean += s * ((z_post.mean[jj] - t.z.mean[jj]) / var);
        w.cov += (shrink / (var * var)) * (s * s.transpose());
        PsdRepair fixed = ensure_psd(w.cov, options.jitter);
        w.cov = std::move(fixed.matrix);
        diag.psd_jitter = std::max(diag.psd_jitter, fixed.jitter);
        if (!w.mean.allFinite() || !w.cov.allFinite()) throw NumericalError("weight update produced non-finite values");
    }
}

}  // namespace

UpdateResult backward_update(const NetworkState& net, const Eigen::VectorXd& x, const Eigen::VectorXd& y_obs,
                             const UpdateOptions& options) {
    check_observation(net, y_obs);
    const ForwardTrace trace = forward(net, x);
    UpdateResult result{net, false, {}, {}};
    UpdateDiagnostics& diag = result.diagnostics;
    for (const LayerTrace& t : trace) {
        diag.clamped_variances += t.moments.clamped_variances;
        diag.mean_rescaled = diag.mean_rescaled || t.moments.mean_rescaled;
    }

    try {
        NetworkState next = net;
        const std::size_t top = trace.size() - 1;
        MomentTriple observed = trace[top].moments;
        if (options.observation == ObservationModel::categorical) {
            const Eigen::VectorXd& p = observed.mean_y;
            observed.cov_y = Eigen::MatrixXd(p.asDiagonal()) - p * p.transpose();
        }
        Conditioned cond = condition_joint(trace[top].z, observed, y_obs, options.jitter);
        diag.solve_jitter = std::max(diag.solve_jitter, cond.solve_jitter);
        diag.psd_jitter = std::max(diag.psd_jitter, cond.psd_jitter);
        update_layer(next.posteriors[top], trace[top], cond.posterior, options, diag);

        // Hidden layers: smooth the layer output through the next layer's prior weight means,
        // then pull the resulting change back onto the layer's own pre-activations.
        GaussianFull upper = cond.posterior;
        for (std::size_t l = top; l-- > 0;) {
            const LayerTrace& t = trace[l];
            const LayerTrace& above = trace[l + 1];
            const auto width = static_cast<Eigen::Index>(net.layers[l].width);
            const auto n_above = static_cast<Eigen::Index>(net.layers[l + 1].width);
            Eigen::MatrixXd means(width, n_above);
            for (Eigen::Index j = 0; j < n_above; ++j) {
                means.col(j) = net.posteriors[l + 1][static_cast<std::size_t>(j)].mean.head(width);
            }
            const Eigen::MatrixXd& cov_y = t.moments.cov_y;
            const Eigen::MatrixXd cross = cov_y * means;
            const Eigen::MatrixXd total = Eigen::MatrixXd(above.z.var.asDiagonal()) + means.transpose() * cross;
            const SpdSolve gain_t = solve_spd(total, cross.transpose(), options.jitter);
            diag.solve_jitter = std::max(diag.solve_jitter, gain_t.jitter);
            const Eigen::MatrixXd gain = gain_t.x.transpose();
            const Eigen::VectorXd dy = gain * (upper.mean - above.z.mean);
            const Eigen::MatrixXd reduction =
                gain * (Eigen::MatrixXd(above.z.var.asDiagonal()) - upper.cov) * gain.transpose();

            Eigen::VectorXd regress = Eigen::VectorXd::Zero(width);
            for (Eigen::Index j = 0; j < width; ++j) {
                if (cov_y(j, j) > options.variance_floor) regress[j] = t.moments.cov_zy(j, j) / cov_y(j, j);
            }
            GaussianFull post;
            post.mean = t.z.mean + regress.cwiseProduct(dy);
            const Eigen::MatrixXd cov = Eigen::MatrixXd(t.z.var.asDiagonal()) -
                                        regress.asDiagonal() * reduction * regress.asDiagonal();
            PsdRepair fixed = ensure_psd(cov, options.jitter);
            diag.psd_jitter = std::max(diag.psd_jitter, fixed.jitter);
            post.cov = std::move(fixed.matrix);
            update_layer(next.posteriors[l], t, post, options, diag);
            upper = std::move(post);
        }
        next.step_count = net.step_count + 1;
        result.state = std::move(next);
        result.applied = true;
    } catch (const NumericalError& e) {
        result.state = net;
        result.applied = false;
        result.reason = e.what();
    }
    return result;
}

TrainResult train(const NetworkState& net, const Dataset& data, const UpdateOptions& options,
                  const StepObserver& observer) {
    data.validate();
    TrainResult out{net, {}};
    for (std::size_t k = 0; k < data.rows.size(); ++k) {
        UpdateResult r = backward_update(out.state, data.rows[k].x, data.rows[k].y, options);
        if (r.applied) {
            ++out.report.applied;
        } else {
            ++out.report.skipped;
            out.report.skipped_indices.push_back(k);
            out.report.skip_reasons.push_back(r.reason);
        }
        if (r.diagnostics.solve_jitter > 0.0 || r.diagnostics.psd_jitter > 0.0) ++out.report.jitter_events;
        out.report.clamp_events += static_cast<std::size_t>(r.diagnostics.clamped_variances);
        if (r.diagnostics.mean_rescaled) ++out.report.rescale_events;
        out.state = std::move(r.state);
        if (observer) observer(k + 1, out.state);
    }
    return out;
}

Prediction predict(const NetworkState& net, const Eigen::VectorXd& x) {
    const ForwardTrace trace = forward(net, x);
    const MomentTriple& top = trace.back().moments;
    const Eigen::Index k = top.mean_y.size();
    Prediction p;
    p.probabilities.resize(k + 1);
    p.probabilities.head(k) = top.mean_y;
    p.probabilities[k] = std::max(0.0, 1.0 - top.mean_y.sum());
    p.covariance = top.cov_y;
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i <= k; ++i) {
        if (p.probabilities[i] > p.probabilities[best]) best = i;
    }
    p.label = static_cast<std::size_t>(best);
    return p;
}

}  // namespace bnn
