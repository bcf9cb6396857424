#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <vector>

namespace bnn {

/// One training instance. y has N-1 entries: one-hot for classes 0..N-2, all zero for class N-1.
struct Sample {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
};

struct Dataset {
    std::vector<Sample> rows;

    [[nodiscard]] std::size_t size() const { return rows.size(); }
    [[nodiscard]] bool empty() const { return rows.empty(); }
    /// Throws ConfigError on inconsistent widths or malformed labels.
    void validate() const;
};

/// Encodes 0-based class index cls among n_classes as an (n_classes - 1)-vector.
[[nodiscard]] Eigen::VectorXd encode_label(std::size_t cls, std::size_t n_classes);
/// Inverse of encode_label.
[[nodiscard]] std::size_t decode_label(const Eigen::VectorXd& y);

/// Two-dimensional wedge labeler: class 0 above both diagonals, class 1 below both,
/// class 2 otherwise (including points on a diagonal).
[[nodiscard]] std::size_t wedge_class(double x1, double x2);

/// CSV with header x1,...,xd,label and 1-based labels.
void write_dataset_csv(const Dataset& data, std::size_t n_classes, const std::filesystem::path& path);
[[nodiscard]] Dataset read_dataset_csv(const std::filesystem::path& path, std::size_t n_classes);

}  // namespace bnn
