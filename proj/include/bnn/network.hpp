#pragma once

#include "bnn/activations.hpp"
#include "bnn/dataset.hpp"
#include "bnn/gauss.hpp"
#include "bnn/probit.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace bnn {

struct Activation {
    enum class Kind { pwl, softmax };
    Kind kind = Kind::softmax;
    PwlParams pwl;

    [[nodiscard]] static Activation softmax() { return {Kind::softmax, {}}; }
    [[nodiscard]] static Activation piecewise(PwlParams p) { return {Kind::pwl, p}; }
};

struct LayerSpec {
    std::size_t width = 0;
    Activation activation;
    /// Fold a bias into the weights by appending a constant 1 to the layer input.
    bool bias = true;
};

/// Weight posteriors of a fully connected network. Hidden layers are piecewise-linear,
/// the last layer is softmax.
struct NetworkState {
    std::size_t input_width = 0;
    std::vector<LayerSpec> layers;
    /// posteriors[l][j] is the weight column of neuron j in layer l.
    std::vector<std::vector<WeightPosterior>> posteriors;
    ProbitConfig probit;
    std::size_t step_count = 0;

    [[nodiscard]] std::size_t classes() const { return layers.empty() ? 0 : layers.back().width; }
    /// Input width of layer l including the bias slot.
    [[nodiscard]] std::size_t fan_in(std::size_t l) const;
    void validate() const;

    /// Every weight column gets mean `mean` (scalar broadcast) and covariance prior_var * I.
    [[nodiscard]] static NetworkState isotropic(std::size_t input_width, std::vector<LayerSpec> layers,
                                                double prior_var = 1.0, double mean = 0.0);
};

struct LayerTrace {
    /// Layer input, bias-augmented when the layer has a bias.
    Eigen::VectorXd input;
    GaussianDiag z;
    MomentTriple moments;
    /// Point value handed to the next layer (the mean output).
    Eigen::VectorXd y;
};

using ForwardTrace = std::vector<LayerTrace>;

[[nodiscard]] ForwardTrace forward(const NetworkState& net, const Eigen::VectorXd& x);

/// How the output covariance in the conditioning step is formed.
enum class ObservationModel {
    /// Covariance of a categorical label with the predicted class probabilities,
    /// diag(mean_y) - mean_y mean_y^T.
    categorical,
    /// The approximated covariance of the softmax output itself.
    softmax_output,
};

struct UpdateOptions {
    ObservationModel observation = ObservationModel::categorical;
    JitterPolicy jitter;
    double variance_floor = 1e-12;
};

struct UpdateDiagnostics {
    double solve_jitter = 0.0;
    double psd_jitter = 0.0;
    int clamped_variances = 0;
    bool mean_rescaled = false;
};

struct UpdateResult {
    NetworkState state;
    bool applied = false;
    /// Empty when applied; otherwise why the instance was skipped.
    std::string reason;
    UpdateDiagnostics diagnostics;
};

/// One sequential Bayesian update on (x, y_obs). A numerically unusable instance is skipped
/// and the input state is returned unchanged.
[[nodiscard]] UpdateResult backward_update(const NetworkState& net, const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& y_obs, const UpdateOptions& options = {});

struct TrainingReport {
    std::size_t applied = 0;
    std::size_t skipped = 0;
    std::vector<std::size_t> skipped_indices;
    std::vector<std::string> skip_reasons;
    std::size_t jitter_events = 0;
    std::size_t clamp_events = 0;
    std::size_t rescale_events = 0;
};

struct TrainResult {
    NetworkState state;
    TrainingReport report;
};

/// Called after instance k (1-based) has been processed.
using StepObserver = std::function<void(std::size_t k, const NetworkState& state)>;

[[nodiscard]] TrainResult train(const NetworkState& net, const Dataset& data, const UpdateOptions& options = {},
                                const StepObserver& observer = {});

struct Prediction {
    /// All N class probabilities; the last one is the implicit class.
    Eigen::VectorXd probabilities;
    /// Covariance of the first N-1 outputs.
    Eigen::MatrixXd covariance;
    /// 0-based argmax, lowest index on ties.
    std::size_t label = 0;
};

[[nodiscard]] Prediction predict(const NetworkState& net, const Eigen::VectorXd& x);

}  // namespace bnn
