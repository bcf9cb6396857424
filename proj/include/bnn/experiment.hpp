#pragma once

#include "bnn/dataset.hpp"
#include "bnn/network.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace bnn {

/// Synthetic wedge classification run: data generation, sequential training and grid snapshots.
struct ExperimentConfig {
    std::size_t m = 25;
    double lo = -2.0;
    double hi = 2.0;
    std::uint64_t seed = 42;
    /// Initial network, including its probit configuration.
    NetworkState network;
    UpdateOptions update;
    std::vector<std::size_t> snapshots{0, 12, 25};
    std::size_t grid_resolution = 41;

    void validate() const;

    /// 25 points on [-2, 2]^2, one softmax layer without bias, weight means
    /// (1, 0), (0, 1), (1, 1) and identity covariances.
    [[nodiscard]] static ExperimentConfig standard();
};

[[nodiscard]] std::string config_to_string(const ExperimentConfig& cfg);
/// Fields missing from the document keep their standard() values.
[[nodiscard]] ExperimentConfig config_from_string(const std::string& text);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Maps 64 random bits to a double in [0, 1) using the top 53 bits.
[[nodiscard]] double unit_double(std::uint64_t bits);

/// m points uniform on [lo, hi]^2 from std::mt19937_64(seed), labelled by wedge_class.
[[nodiscard]] Dataset gen_data(const ExperimentConfig& cfg);

/// Predictive grid over [lo, hi]^2 as CSV: x1,x2,mu_y1..,var_y1..; x1 is the outer loop.
[[nodiscard]] std::string grid_csv(const NetworkState& net, double lo, double hi, std::size_t resolution);

/// Fraction of rows whose argmax prediction matches the label.
[[nodiscard]] double accuracy(const NetworkState& net, const Dataset& data);

struct ExperimentResult {
    Dataset data;
    NetworkState final_state;
    TrainingReport report;
    double train_accuracy = 0.0;
    /// Grid CSV text keyed by snapshot step.
    std::map<std::size_t, std::string> grids;
    /// Largest per-step increase of any weight variance seen during training.
    double max_variance_increase = 0.0;
};

[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes data.csv, grid_step_<k>.csv, checkpoint.json, config.json and report.json.
void write_experiment(const ExperimentConfig& cfg, const ExperimentResult& result,
                      const std::filesystem::path& out_dir);

[[nodiscard]] std::string report_to_string(const ExperimentResult& result);

}  // namespace bnn
